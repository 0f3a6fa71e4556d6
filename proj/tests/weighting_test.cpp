#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bwlab/weighting.hpp"
#include "gradcheck.hpp"

using namespace bwlab;
using namespace bwlab::ad;

namespace {

double ratio(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

WeightNetConfig small(WeightStrategy s) {
  WeightNetConfig c;
  c.strategy = s;
  c.width = 8;
  return c;
}

}  // namespace

TEST(BatchSoftmax, EqualLogitsMeanOne) {
  const std::vector<double> l(4, -0.7);
  EXPECT_EQ(batch_softmax(l, Normalization::MeanOne).values, std::vector<double>(4, 1.0));
}

TEST(BatchSoftmax, HandExamples) {
  const std::vector<double> l{std::log(2.0), 0.0};
  const auto mean_one = batch_softmax(l, Normalization::MeanOne).values;
  EXPECT_NEAR(mean_one[0], 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(mean_one[1], 2.0 / 3.0, 1e-15);
  const auto sum_one = batch_softmax(l, Normalization::SumOne).values;
  EXPECT_NEAR(sum_one[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(sum_one[1], 1.0 / 3.0, 1e-15);
}

TEST(BatchSoftmax, LargeLogitsStayFinite) {
  const std::vector<double> l{1000.0, 0.0, -1000.0};
  const auto w = batch_softmax(l, Normalization::MeanOne);
  EXPECT_NO_THROW(w.validate());
  EXPECT_NEAR(w.values[0], 3.0, 1e-12);
  EXPECT_THROW(batch_softmax(std::vector<double>{NAN, 0.0}, Normalization::MeanOne), NumericalError);
  EXPECT_THROW(batch_softmax(std::vector<double>{}, Normalization::MeanOne), std::invalid_argument);
}

TEST(BatchSoftmax, DifferentiableFormAgrees) {
  RandomStream rng(1);
  const auto logits = gradcheck::random_tensor({6, 1}, rng);
  Tape t;
  for (auto n : {Normalization::SumOne, Normalization::MeanOne}) {
    const auto v = batch_softmax(t.constant(logits), n).value().storage();
    const auto ref = batch_softmax(logits.storage(), n).values;
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], ref[i], 1e-15);
  }
}

TEST(Clip, WithinBoundUnchanged) {
  BatchWeights w{{1.2, 0.8, 1.0}, Normalization::MeanOne};
  EXPECT_EQ(clip(w, 2.0).values, w.values);
}

TEST(Clip, HandExampleRatioAndMean) {
  BatchWeights w{{3.8, 0.1, 0.1}, Normalization::MeanOne};
  const auto c = clip(w, 2.0).values;
  EXPECT_LE(ratio(c), 4.0 * (1 + 1e-12));
  EXPECT_NEAR(total(c) / 3.0, 1.0, 1e-9);
  EXPECT_GT(c[0], c[1]);
  // exact solution: c/2 * 2 + 2c = 3 -> c = 1
  EXPECT_NEAR(c[0], 2.0, 1e-12);
  EXPECT_NEAR(c[1], 0.5, 1e-12);
}

TEST(Clip, InfiniteBoundIsIdentity) {
  BatchWeights w{{2.9, 0.05, 0.05}, Normalization::MeanOne};
  EXPECT_EQ(clip(w, INFINITY).values, w.values);
}

TEST(Clip, RandomWeightsProperty) {
  RandomStream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + trial % 50;
    std::vector<double> l(m);
    for (auto& v : l) v = 3.0 * rng.normal();
    for (auto n : {Normalization::SumOne, Normalization::MeanOne}) {
      const auto w = batch_softmax(l, n);
      const double r = rng.uniform(1.05, 4.0);
      const auto c = clip(w, r);
      EXPECT_LE(ratio(c.values), r * r * (1 + 1e-9));
      EXPECT_NEAR(total(c.values), w.target_total(), 1e-9 * w.target_total());
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          if (w.values[i] < w.values[j]) {
            ASSERT_LE(c.values[i], c.values[j]);
          }
    }
  }
}

TEST(Clip, ScheduleRelaxes) {
  ClipSchedule s;
  EXPECT_EQ(s.bound_at(0), 3.0);
  EXPECT_EQ(s.bound_at(4999), 3.0);
  EXPECT_DOUBLE_EQ(s.bound_at(5000), 4.5);
  EXPECT_DOUBLE_EQ(s.bound_at(10000), 6.75);
  EXPECT_THROW((ClipSchedule{1.0, 1.5, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((ClipSchedule{2.0, 0.5, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((ClipSchedule{2.0, 1.5, 0}.validate()), std::invalid_argument);
}

TEST(Clip, DifferentiableFormMatchesAndMasksGradient) {
  Tape t;
  auto w = t.variable(Tensor::matrix(3, 1, {3.8, 0.1, 0.1}));
  auto c = clip(w, 2.0, Normalization::MeanOne);
  const auto ref = clip(BatchWeights{{3.8, 0.1, 0.1}, Normalization::MeanOne}, 2.0).values;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(c.value()[i], ref[i], 1e-15);
  t.backward(sum(c), Tensor::scalar(1.0));
  EXPECT_EQ(t.grad(w), Tensor({3, 1}, 0.0));

  Tape t2;
  auto w2 = t2.variable(Tensor::matrix(3, 1, {1.2, 0.8, 1.0}));
  auto c2 = clip(w2, 2.0, Normalization::MeanOne);
  t2.backward(sum(c2), Tensor::scalar(1.0));
  EXPECT_EQ(t2.grad(w2), Tensor({3, 1}, 1.0));
}

TEST(Compose, ZeroNetworksGiveUniformWeights) {
  RandomStream rng(4);
  const auto x = gradcheck::random_tensor({5, 2}, rng), y = gradcheck::random_tensor({5, 2}, rng);
  for (auto s : {WeightStrategy::Concat, WeightStrategy::OneSided, WeightStrategy::Composite}) {
    WeightNetworks nets(small(s), rng);
    for (auto* n : nets.networks()) n->zero_parameters();
    const auto [wx, wy] = compose(nets, x, y, y, x);
    EXPECT_EQ(wx.values, std::vector<double>(5, 1.0)) << to_string(s);
    EXPECT_EQ(wy.values, std::vector<double>(5, 1.0)) << to_string(s);
  }
}

TEST(Compose, CompositeMatchesDefinition) {
  RandomStream rng(5);
  WeightNetworks nets(small(WeightStrategy::Composite), rng);
  const auto x = gradcheck::random_tensor({6, 2}, rng), y = gradcheck::random_tensor({6, 2}, rng);
  const auto gxy = gradcheck::random_tensor({6, 2}, rng), gyx = gradcheck::random_tensor({6, 2}, rng);
  const auto logits = [&](WeightNet& n, const Tensor& in, double sign) {
    Tape t;
    auto v = n.logits(t, t.constant(in), false).value().storage();
    for (auto& e : v) e *= sign;
    return batch_softmax(v, Normalization::MeanOne).values;
  };
  const auto a1 = logits(nets.primary(), x, 1), a2 = logits(nets.secondary(), gxy, -1);
  const auto b1 = logits(nets.primary(), gyx, -1), b2 = logits(nets.secondary(), y, 1);
  const auto [wx, wy] = compose(nets, x, y, gxy, gyx);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(wx.values[i], 0.5 * (a1[i] + a2[i]), 1e-14);
    EXPECT_NEAR(wy.values[i], 0.5 * (b1[i] + b2[i]), 1e-14);
  }
  EXPECT_NO_THROW(wx.validate());
  EXPECT_NO_THROW(wy.validate());
}

TEST(Compose, GradientsThroughWeightNetworks) {
  RandomStream rng(6);
  for (auto s : {WeightStrategy::Concat, WeightStrategy::OneSided, WeightStrategy::Composite}) {
    WeightNetworks nets(small(s), rng);
    std::vector<ParameterSet*> params;
    for (auto* n : nets.networks()) {
      n->refresh_spectral(50);
      params.push_back(&n->params());
    }
    const auto f = [&nets](Tape&, const std::vector<Var>& v) {
      auto w = compose(nets, v[0], v[1], v[2], v[3], true);
      return concat_cols({midpoint_factors(w.wx), w.wy});
    };
    std::vector<Tensor> in;
    for (int k = 0; k < 4; ++k) in.push_back(gradcheck::random_tensor({5, 2}, rng));
    const auto r = gradcheck::check(f, in, params, rng);
    EXPECT_LT(r.max_rel_err, 1e-4) << to_string(s) << " " << r.worst;
  }
}

TEST(MidpointFactors, Values) {
  EXPECT_EQ(midpoint_factors(BatchWeights{{1, 1, 1}, Normalization::MeanOne}), std::vector<double>(3, 1.0));
  const auto f = midpoint_factors(BatchWeights{{0.4, 1.6}, Normalization::MeanOne});
  EXPECT_NEAR(f[0], 0.7, 1e-15);
  EXPECT_THROW(midpoint_factors(BatchWeights{{0.5, 0.5}, Normalization::SumOne}), std::invalid_argument);
}

TEST(WeightNetworks, SecondaryOnlyForComposite) {
  RandomStream rng(7);
  WeightNetworks one(small(WeightStrategy::OneSided), rng);
  EXPECT_THROW(one.secondary(), std::logic_error);
  EXPECT_EQ(one.primary().input_dim(), 2u);
  WeightNetworks cat(small(WeightStrategy::Concat), rng);
  EXPECT_EQ(cat.primary().input_dim(), 4u);
  WeightNetworks comp(small(WeightStrategy::Composite), rng);
  EXPECT_EQ(comp.secondary().name(), "wy");
  EXPECT_EQ(parse_strategy("composite"), WeightStrategy::Composite);
  EXPECT_THROW(parse_strategy("x"), std::invalid_argument);
}
