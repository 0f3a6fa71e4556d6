#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bwlab/domains.hpp"

using namespace bwlab;

namespace {

std::vector<double> frequencies(const MixtureDomain& d, std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  const auto batch = sample_batch(d, n, rng);
  std::vector<double> f(d.size(), 0.0);
  for (int l : batch.labels) f[d.index_of(l)] += 1.0 / static_cast<double>(n);
  return f;
}

double chi_square(const std::vector<double>& freq, const std::vector<double>& p, std::size_t n) {
  double c = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) c += n * std::pow(freq[k] - p[k], 2) / p[k];
  return c;
}

}  // namespace

TEST(RnOracle, EqualMassesGiveOnes) {
  EXPECT_EQ(rn_oracle({{0.3, 0.7}, {0.3, 0.7}}), (std::vector<double>{1.0, 1.0}));
}

TEST(RnOracle, HandExample) {
  const auto w = rn_oracle({{0.5, 0.5}, {0.2, 0.8}});
  EXPECT_NEAR(w[0], 0.4, 1e-15);
  EXPECT_NEAR(w[1], 1.6, 1e-15);
}

TEST(RnOracle, ZeroMassIsSupportError) {
  EXPECT_THROW(rn_oracle({{0.5, 0.5}, {0.0, 1.0}}), SupportError);
  EXPECT_THROW(rn_oracle({{1.0, 0.0}, {0.5, 0.5}}), SupportError);
  EXPECT_THROW(rn_oracle({{0.5, 0.5}, {0.5}}), std::invalid_argument);
  EXPECT_THROW(rn_oracle({{0.5, 0.6}, {0.5, 0.5}}), std::invalid_argument);
}

TEST(MidpointOracle, HandExamples) {
  const CategoricalPair pair{{0.5, 0.5}, {0.2, 0.8}};
  const auto mid = midpoint_oracle(pair);
  EXPECT_NEAR(mid[0], 0.35, 1e-15);
  EXPECT_NEAR(mid[1], 0.65, 1e-15);
  // q side: 0.2 * (1 + 1 / 0.4) / 2
  EXPECT_NEAR(0.2 * 0.5 * (1.0 + 2.5), 0.35, 1e-15);
  const CategoricalPair same{{0.1, 0.9}, {0.1, 0.9}};
  EXPECT_EQ(midpoint_oracle(same), same.p);
}

TEST(MidpointOracle, TwoClassPreset) {
  const auto pair = make_preset("twoclass-skew").categorical();
  const auto mid = midpoint_oracle(pair);
  EXPECT_NEAR(mid[0], (0.26 + 0.9) / 2, 1e-15);
  EXPECT_NEAR(mid[0], 0.58, 1e-12);
  EXPECT_NEAR(mid[1], 0.42, 1e-12);
  EXPECT_LT(midpoint_residual(pair, rn_oracle(pair)), 1e-12);
  EXPECT_GT(midpoint_residual(pair, std::vector<double>{1.0, 1.0}), 0.1);
}

TEST(MidpointOracle, RandomPairsSatisfyBothSides) {
  RandomStream rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + trial % 9;
    CategoricalPair pair{std::vector<double>(k), std::vector<double>(k)};
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      sp += pair.p[i] = rng.uniform(0.01, 1.0);
      sq += pair.q[i] = rng.uniform(0.01, 1.0);
    }
    for (std::size_t i = 0; i < k; ++i) {
      pair.p[i] /= sp;
      pair.q[i] /= sq;
    }
    double sp2 = 0.0, sq2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) sp2 += pair.p[i], sq2 += pair.q[i];
    if (std::abs(sp2 - 1.0) > 1e-12 || std::abs(sq2 - 1.0) > 1e-12) continue;
    const auto mid = midpoint_oracle(pair);
    const auto w = rn_oracle(pair);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_NEAR(pair.p[i] * (1 + w[i]) / 2, mid[i], 1e-12);
      EXPECT_NEAR(pair.q[i] * (1 + 1 / w[i]) / 2, mid[i], 1e-12);
    }
  }
}

TEST(Density, StandardNormalAtOrigin) {
  MixtureDomain d({Mode{1.0, {0.0}, Tensor({1, 1}, 1.0), 0}});
  const double x = 0.0;
  EXPECT_NEAR(density(d, std::span<const double>(&x, 1)), 1.0 / std::sqrt(2 * std::numbers::pi), 1e-15);
}

TEST(Density, MixtureIsAverageOfComponents) {
  const auto cov = Tensor::matrix(2, 2, {1.0, 0.3, 0.3, 2.0});
  MixtureDomain a({Mode{1.0, {1.0, 0.0}, cov, 0}});
  MixtureDomain b({Mode{1.0, {-1.0, 2.0}, cov, 1}});
  MixtureDomain ab({Mode{0.5, {1.0, 0.0}, cov, 0}, Mode{0.5, {-1.0, 2.0}, cov, 1}});
  const std::vector<double> x{0.3, 0.7};
  EXPECT_NEAR(density(ab, x), 0.5 * (density(a, x) + density(b, x)), 1e-15);
  // closed form for the first component
  const double det = 2.0 - 0.09;
  const double dx = x[0] - 1.0, dy = x[1];
  const double q = (2.0 * dx * dx - 0.6 * dx * dy + 1.0 * dy * dy) / det;
  EXPECT_NEAR(density(a, x), std::exp(-0.5 * q) / (2 * std::numbers::pi * std::sqrt(det)), 1e-14);
}

TEST(MixtureDomain, RejectsBadModes) {
  EXPECT_THROW(MixtureDomain(std::vector<Mode>{}), std::invalid_argument);
  EXPECT_THROW(MixtureDomain({Mode{0.5, {0, 0}, Tensor::matrix(2, 2, {1, 0, 0, 1}), 0},
                              Mode{0.6, {1, 1}, Tensor::matrix(2, 2, {1, 0, 0, 1}), 1}}),
               std::invalid_argument);
  EXPECT_THROW(MixtureDomain({Mode{1.0, {0, 0}, Tensor::matrix(2, 2, {1, 0.5, 0, 1}), 0}}), std::invalid_argument);
  EXPECT_THROW(MixtureDomain({Mode{1.0, {0, 0}, Tensor({3, 3}, 1.0), 0}}), ShapeError);
}

TEST(SampleBatch, SingleModeLabels) {
  MixtureDomain d({Mode{1.0, {2.0, -1.0}, Tensor::matrix(2, 2, {1, 0, 0, 1}), 7}});
  RandomStream rng(1);
  const auto b = sample_batch(d, 100, rng);
  for (int l : b.labels) EXPECT_EQ(l, 7);
  EXPECT_EQ(b.points.shape(), (ad::Shape{100, 2}));
}

TEST(SampleBatch, MeanAndCovarianceOfOneMode) {
  const auto cov = Tensor::matrix(2, 2, {0.5, 0.2, 0.2, 0.3});
  MixtureDomain d({Mode{1.0, {1.0, -2.0}, cov, 0}});
  RandomStream rng(2);
  const std::size_t n = 100000;
  const auto b = sample_batch(d, n, rng);
  double mx = 0, my = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) mx += b.points(i, 0) / n, my += b.points(i, 1) / n;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = b.points(i, 0) - mx, c = b.points(i, 1) - my;
    sxx += a * a / n, sxy += a * c / n, syy += c * c / n;
  }
  EXPECT_NEAR(mx, 1.0, 0.01);
  EXPECT_NEAR(my, -2.0, 0.01);
  EXPECT_NEAR(sxx, 0.5, 0.01);
  EXPECT_NEAR(sxy, 0.2, 0.01);
  EXPECT_NEAR(syy, 0.3, 0.01);
}

TEST(SampleBatch, SkewedTargetHeavyModeFrequency) {
  const auto f = frequencies(make_preset("srmnist2d").target, 10000, 3);
  EXPECT_GE(f[0], 0.48);
  EXPECT_LE(f[0], 0.52);
}

// 1 degree of freedom, alpha = 0.01: critical value 6.635.
TEST(SampleBatch, TwoClassChiSquare) {
  const auto pair = make_preset("twoclass-skew");
  const std::size_t n = 10000;
  EXPECT_LT(chi_square(frequencies(pair.source, n, 4), {0.26, 0.74}, n), 6.635);
  EXPECT_LT(chi_square(frequencies(pair.target, n, 5), {0.9, 0.1}, n), 6.635);
}

TEST(SampleBatch, ZeroBatchRejected) {
  RandomStream rng(1);
  EXPECT_THROW(sample_batch(make_preset("balanced").source, 0, rng), std::invalid_argument);
}

TEST(Presets, Masses) {
  const auto balanced = make_preset("balanced");
  EXPECT_EQ(balanced.source.masses(), balanced.target.masses());
  const auto srm = make_preset("srmnist2d");
  EXPECT_DOUBLE_EQ(srm.target.mode(srm.target.index_of(srm.counterpart(0))).mass, 0.5);
  for (double m : srm.source.masses()) EXPECT_DOUBLE_EQ(m, 0.1);
  const auto ms = make_preset("mnist-svhn-like");
  EXPECT_DOUBLE_EQ(ms.target.mode(ms.target.index_of(ms.counterpart(1))).mass, 0.2);
  const auto two = make_preset("twoclass-skew").categorical();
  EXPECT_EQ(two.p, (std::vector<double>{0.26, 0.74}));
  EXPECT_EQ(two.q, (std::vector<double>{0.9, 0.1}));
  EXPECT_THROW(make_preset("nope"), std::invalid_argument);
}

TEST(Presets, AllValidateAndRoundTripJson) {
  for (const auto& name : preset_names()) {
    const auto pair = make_preset(name);
    EXPECT_EQ(pair.name, name);
    EXPECT_NO_THROW(pair.validate());
    const auto back = domain_pair_from_json(to_json(pair));
    EXPECT_EQ(to_json(back), to_json(pair));
    for (const auto& [s, t] : pair.correspondence) EXPECT_EQ(pair.preimage(t), s);
  }
}

TEST(Presets, ModesAreSeparable) {
  // nearest-mean classification of fresh samples
  for (const auto& name : {"srmnist2d", "twoclass-skew"}) {
    const auto pair = make_preset(name);
    for (const auto* d : {&pair.source, &pair.target}) {
      RandomStream rng(9);
      const auto b = sample_batch(*d, 5000, rng);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < 5000; ++i) {
        std::size_t best = 0;
        double bl = -INFINITY;
        for (std::size_t k = 0; k < d->size(); ++k) {
          const double l = d->log_component(k, b.points.row(i));
          if (l > bl) bl = l, best = k;
        }
        hits += d->mode(best).label == b.labels[i];
      }
      EXPECT_GT(hits, 4950u) << name;
    }
  }
}

TEST(WithMasses, ReplacesAndValidates) {
  const auto pair = with_masses(make_preset("twoclass-skew"), {0.5, 0.5}, {0.5, 0.5});
  EXPECT_EQ(pair.categorical().p, (std::vector<double>{0.5, 0.5}));
  EXPECT_THROW(with_masses(make_preset("twoclass-skew"), {1.0}, {}), std::invalid_argument);
  EXPECT_THROW(with_masses(make_preset("twoclass-skew"), {0.7, 0.7}, {}), std::invalid_argument);
}

TEST(Categorical, EmbeddingToy) {
  const auto pair = make_preset("categorical");
  EXPECT_EQ(pair.categorical().p, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(pair.categorical().q, (std::vector<double>{0.2, 0.8}));
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(pair.source.mode(k).mean, pair.target.mode(k).mean);
}
