#include <gtest/gtest.h>

#include <cmath>

#include "bwlab/random.hpp"

using namespace bwlab;

TEST(Random, NamedStreamsAreIndependentAndStable) {
  RandomStream a(42, "data-x"), b(42, "data-x"), c(42, "noise");
  EXPECT_EQ(a.next_u64(), b.next_u64());
  RandomStream a2(42, "data-x");
  EXPECT_NE(a2.next_u64(), c.next_u64());
  EXPECT_NE(derive_seed(1, "noise"), derive_seed(2, "noise"));
}

TEST(Random, StateRoundTripContinuesExactly) {
  RandomStream r(9, "eval");
  for (int i = 0; i < 10; ++i) r.normal();
  const auto saved = r.state();
  std::vector<double> expect;
  for (int i = 0; i < 5; ++i) expect.push_back(r.normal());
  RandomStream back;
  back.restore(saved);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(back.normal(), expect[i]);
  EXPECT_THROW(back.restore("garbage"), std::invalid_argument);
}

TEST(Random, UniformRangeAndMoments) {
  RandomStream r(1);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 0.002);
}

TEST(Random, NormalMoments) {
  RandomStream r(2);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
}

// Chi-square goodness of fit, 3 degrees of freedom; 16.27 is the 0.999 quantile.
TEST(Random, CategoricalChiSquare) {
  RandomStream r(3);
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  std::vector<double> counts(4, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[r.categorical(p)] += 1;
  double chi2 = 0.0;
  for (int k = 0; k < 4; ++k) chi2 += std::pow(counts[k] - n * p[k], 2) / (n * p[k]);
  EXPECT_LT(chi2, 16.27);
}
