#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "bwlab/autodiff/spectral.hpp"
#include "bwlab/random.hpp"

using namespace bwlab;
using namespace bwlab::ad;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, RandomStream& rng) {
  Tensor t({r, c});
  for (auto& v : t.storage()) v = rng.normal();
  return t;
}

double svd_top(const Tensor& w) {
  Eigen::MatrixXd m(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) m(i, j) = w(i, j);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

SpectralState random_state(std::size_t n, RandomStream& rng) {
  std::vector<double> u(n);
  for (auto& v : u) v = rng.normal();
  return SpectralState::from(u);
}

}  // namespace

TEST(Spectral, PowerIterationConvergesToSvd) {
  RandomStream rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w = random_matrix(6, 4, rng);
    auto s = random_state(6, rng);
    for (int i = 0; i < 200; ++i) power_iteration(w, s);
    EXPECT_NEAR(estimate_sigma(w, s), svd_top(w), 1e-9 * svd_top(w));
  }
}

TEST(Spectral, NormalizedMatrixHasUnitNorm) {
  RandomStream rng(4);
  const auto w = random_matrix(5, 5, rng);
  auto s = random_state(5, rng);
  for (int i = 0; i < 100; ++i) power_iteration(w, s);
  EXPECT_NEAR(svd_top(spectral_normalize(w, s)), 1.0, 1e-9);
}

TEST(Spectral, EstimateNeverExceedsTrueNorm) {
  RandomStream rng(5);
  const auto w = random_matrix(8, 3, rng);
  auto s = random_state(8, rng);
  EXPECT_LE(estimate_sigma(w, s), svd_top(w) * (1 + 1e-12));
  power_iteration(w, s);
  EXPECT_LE(estimate_sigma(w, s), svd_top(w) * (1 + 1e-12));
}

TEST(Spectral, ZeroMatrixUnchanged) {
  Tensor w({3, 2}, 0.0);
  auto s = SpectralState::from({1, 1, 0});
  const auto u0 = s.u;
  EXPECT_FALSE(power_iteration(w, s));
  EXPECT_EQ(s.u, u0);
  EXPECT_EQ(spectral_normalize(w, s), w);
}

TEST(Spectral, ShapeErrors) {
  auto s = SpectralState::from({1, 0});
  EXPECT_THROW(estimate_sigma(Tensor({3, 2}), s), ShapeError);
  EXPECT_THROW(estimate_sigma(Tensor({3}), s), ShapeError);
  EXPECT_THROW(SpectralState::from({0, 0}), std::invalid_argument);
}

TEST(Spectral, ScaledIdentity) {
  auto w = Tensor::matrix(2, 2, {5, 0, 0, 5});
  auto s = SpectralState::from({0.6, 0.8});
  const auto n = spectral_normalize(w, s);
  EXPECT_NEAR(n(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(n(1, 1), 1.0, 1e-12);
  EXPECT_EQ(n(0, 1), 0.0);
}

TEST(Spectral, DiagonalAfterTwentyIterations) {
  auto w = Tensor::matrix(2, 2, {3, 0, 0, 1});
  auto s = SpectralState::from({1, 1});
  for (int i = 0; i < 19; ++i) power_iteration(w, s);
  const auto n = spectral_normalize(w, s);  // 20th iteration
  EXPECT_NEAR(n(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(n(1, 1), 1.0 / 3.0, 1e-6);
}
