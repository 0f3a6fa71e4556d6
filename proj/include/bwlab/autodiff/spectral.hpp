#pragma once

#include <cmath>
#include <vector>

#include "bwlab/autodiff/tensor.hpp"
#include "bwlab/error.hpp"

namespace bwlab::ad {

/// Persistent left singular vector estimate for one weight matrix.
struct SpectralState {
  std::vector<double> u;

  static SpectralState from(std::vector<double> u) {
    double n = 0.0;
    for (double v : u) n += v * v;
    n = std::sqrt(n);
    if (!(n > 0.0)) throw std::invalid_argument("spectral state needs a non-zero initial vector");
    for (auto& v : u) v /= n;
    return {std::move(u)};
  }
};

namespace detail {
inline void check_spectral(const Tensor& w, const SpectralState& s) {
  if (w.rank() != 2) throw ShapeError("weight", "spectral normalization needs a matrix, got " + shape_string(w.shape()));
  if (s.u.size() != w.rows()) {
    throw ShapeError("u", "u has length " + std::to_string(s.u.size()) + " but weight has " +
                              std::to_string(w.rows()) + " rows");
  }
}

inline double normalize(std::vector<double>& x) {
  double n = 0.0;
  for (double v : x) n += v * v;
  n = std::sqrt(n);
  if (n > 0.0)
    for (auto& v : x) v /= n;
  return n;
}
}  // namespace detail

/// ||W^T u||; equals the top singular value once u has converged.
inline double estimate_sigma(const Tensor& w, const SpectralState& s) {
  detail::check_spectral(w, s);
  double s2 = 0.0;
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) acc += w(i, j) * s.u[i];
    s2 += acc * acc;
  }
  return std::sqrt(s2);
}

/// One power-iteration step: v = W^T u / |.|, u = W v / |.|. Leaves u
/// untouched (and returns false) when W annihilates it.
inline bool power_iteration(const Tensor& w, SpectralState& s) {
  detail::check_spectral(w, s);
  std::vector<double> v(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) v[j] += w(i, j) * s.u[i];
  if (!(detail::normalize(v) > 0.0)) return false;
  std::vector<double> u(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) u[i] += w(i, j) * v[j];
  if (!(detail::normalize(u) > 0.0)) return false;
  s.u = std::move(u);
  return true;
}

/// One power-iteration step on `s`, then W / sigma_hat. A zero matrix is
/// returned unchanged.
inline Tensor spectral_normalize(const Tensor& w, SpectralState& s) {
  power_iteration(w, s);
  const double sigma = estimate_sigma(w, s);
  Tensor out = w;
  if (sigma > 0.0)
    for (auto& v : out.storage()) v /= sigma;
  return out;
}

}  // namespace bwlab::ad
