#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bwlab/autodiff/tensor.hpp"

namespace bwlab::ad {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Ordered collection of named tensors with a flat view, in insertion order.
/// Gradients are accumulated by Tape::backward and cleared with zero_grad().
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::string prefix) : prefix_(std::move(prefix)) {}

  /// Registers a tensor; the stored name is `prefix.name`.
  std::size_t add(const std::string& name, Tensor value) {
    Tensor grad(value.shape(), 0.0);
    params_.push_back({prefix_.empty() ? name : prefix_ + "." + name, std::move(value), std::move(grad)});
    return params_.size() - 1;
  }

  const std::string& prefix() const noexcept { return prefix_; }
  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  std::vector<double> flat_values() const {
    std::vector<double> out;
    out.reserve(total_size());
    for (const auto& p : params_) out.insert(out.end(), p.value.storage().begin(), p.value.storage().end());
    return out;
  }

  std::vector<double> flat_grads() const {
    std::vector<double> out;
    out.reserve(total_size());
    for (const auto& p : params_) out.insert(out.end(), p.grad.storage().begin(), p.grad.storage().end());
    return out;
  }

  void set_flat_values(std::span<const double> flat) {
    if (flat.size() != total_size()) {
      throw ShapeError(prefix_, "flat parameter vector has length " + std::to_string(flat.size()) +
                                    ", expected " + std::to_string(total_size()));
    }
    std::size_t off = 0;
    for (auto& p : params_) {
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), p.value.size(), p.value.storage().begin());
      off += p.value.size();
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.fill(0.0);
  }

 private:
  std::string prefix_;
  std::vector<Parameter> params_;
};

}  // namespace bwlab::ad
