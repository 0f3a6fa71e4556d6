#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bwlab/autodiff/parameters.hpp"
#include "bwlab/error.hpp"

namespace bwlab::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moments are zero-initialized and sized to the
/// flat parameter vector they update.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t n, AdamConfig config) : config_(config), m_(n, 0.0), v_(n, 0.0) {
    if (!(config.lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
      throw std::invalid_argument("adam: betas must lie in [0, 1)");
    }
    if (!(config.epsilon > 0.0)) throw std::invalid_argument("adam: epsilon must be positive");
  }

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t step_count() const noexcept { return t_; }
  const std::vector<double>& first_moment() const noexcept { return m_; }
  const std::vector<double>& second_moment() const noexcept { return v_; }
  std::size_t size() const noexcept { return m_.size(); }

  /// Restores moments and counter (checkpoint resume).
  void restore(std::vector<double> m, std::vector<double> v, std::uint64_t t) {
    if (m.size() != m_.size() || v.size() != v_.size()) {
      throw ShapeError("adam", "restored moments have the wrong length");
    }
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

  void step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
      throw ShapeError("adam", "adam_step: params (" + std::to_string(params.size()) + "), grads (" +
                                   std::to_string(grads.size()) + ") and moments (" + std::to_string(m_.size()) +
                                   ") differ in length");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!std::isfinite(grads[i])) {
        throw NumericalError("#" + std::to_string(i), "adam_step: non-finite gradient at flat index " +
                                                          std::to_string(i));
      }
    }
    apply(params, grads);
  }

  /// Updates every tensor of `params` from its accumulated grad.
  void step(ParameterSet& params) {
    if (params.total_size() != m_.size()) {
      throw ShapeError(params.prefix(), "adam_step: parameter set size does not match optimizer state");
    }
    for (const auto& p : params) {
      if (!p.grad.all_finite()) {
        throw NumericalError(p.name, "adam_step: non-finite gradient in parameter '" + p.name + "'");
      }
    }
    ++t_;
    std::size_t off = 0;
    for (auto& p : params) {
      update(p.value.storage(), p.grad.storage(), off);
      off += p.value.size();
    }
  }

 private:
  void apply(std::span<double> params, std::span<const double> grads) {
    ++t_;
    update(params, grads, 0);
  }

  void update(std::span<double> params, std::span<const double> grads, std::size_t offset) {
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto k = offset + i;
      const double g = grads[i];
      m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * g;
      v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * g * g;
      const double mhat = m_[k] / c1;
      const double vhat = v_[k] / c2;
      params[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }

  AdamConfig config_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace bwlab::ad
