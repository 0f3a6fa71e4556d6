#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bwlab/autodiff/parameters.hpp"
#include "bwlab/autodiff/tape.hpp"

namespace bwlab::ad {

/// Declared input of a Graph. An extent of 0 accepts any size along that axis
/// (used for the batch dimension).
struct InputSpec {
  std::string name;
  Shape shape;
};

/// A differentiable function of named inputs over a ParameterSet: the
/// builder is re-run on a fresh tape at every forward() call.
class Graph {
 public:
  using Builder = std::function<Var(Tape&, ParameterSet&, std::span<const Var>)>;

  Graph(ParameterSet& params, std::vector<InputSpec> inputs, Builder builder)
      : params_(&params), inputs_(std::move(inputs)), builder_(std::move(builder)) {}

  Tensor forward(std::span<const Tensor> inputs) {
    if (inputs.size() != inputs_.size()) {
      throw ShapeError("inputs", "graph expects " + std::to_string(inputs_.size()) + " inputs, got " +
                                     std::to_string(inputs.size()));
    }
    for (std::size_t k = 0; k < inputs.size(); ++k) check_input(inputs_[k], inputs[k]);
    tape_ = std::make_unique<Tape>();
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& t : inputs) vars.push_back(tape_->constant(t));
    output_ = builder_(*tape_, *params_, vars);
    return output_.value();
  }

  Tensor forward(std::initializer_list<Tensor> inputs) {
    std::vector<Tensor> v(inputs);
    return forward(std::span<const Tensor>(v));
  }

  /// Gradient of <seed, output> w.r.t. every parameter, flattened in
  /// ParameterSet order. Parameter grad tensors are overwritten.
  std::vector<double> backward(const Tensor& seed) {
    if (!tape_) throw StateError("backward called before forward");
    params_->zero_grad();
    tape_->backward(output_, seed);
    return params_->flat_grads();
  }

  /// Re-executes the recorded tape against the current parameter values.
  Tensor replay() {
    if (!tape_) throw StateError("replay called before forward");
    tape_->replay();
    return output_.value();
  }

  const Tape& tape() const {
    if (!tape_) throw StateError("no forward pass recorded");
    return *tape_;
  }
  ParameterSet& parameters() { return *params_; }

 private:
  static void check_input(const InputSpec& spec, const Tensor& t) {
    bool ok = spec.shape.size() == t.shape().size();
    for (std::size_t d = 0; ok && d < spec.shape.size(); ++d) ok = spec.shape[d] == 0 || spec.shape[d] == t.shape()[d];
    if (!ok) {
      throw ShapeError(spec.name, "input '" + spec.name + "' has shape " + shape_string(t.shape()) + ", expected " +
                                      shape_string(spec.shape));
    }
  }

  ParameterSet* params_;
  std::vector<InputSpec> inputs_;
  Builder builder_;
  std::unique_ptr<Tape> tape_;
  Var output_;
};

}  // namespace bwlab::ad
