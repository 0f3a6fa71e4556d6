#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "bwlab/autodiff/parameters.hpp"
#include "bwlab/autodiff/tensor.hpp"
#include "bwlab/error.hpp"

namespace bwlab::ad {

enum class Op : std::uint8_t {
  Constant,
  Variable,
  Parameter,
  MatMul,
  AddBias,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Relu,
  LeakyRelu,
  Tanh,
  Sigmoid,
  Softmax,
  Sum,
  Mean,
  Square,
  ConcatCols,
  SpectralNorm,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Variable: return "variable";
    case Op::Parameter: return "parameter";
    case Op::MatMul: return "matmul";
    case Op::AddBias: return "add_bias";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Relu: return "relu";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Softmax: return "softmax";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::Square: return "square";
    case Op::ConcatCols: return "concat_cols";
    case Op::SpectralNorm: return "spectral_norm";
  }
  return "?";
}

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// is alive and not cleared.
class Var {
 public:
  Var() = default;
  Tape* tape() const noexcept { return tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  inline const Tensor& value() const;
  inline const Shape& shape() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

namespace detail {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

inline ConstMap as_matrix(const Tensor& t) {
  return {t.storage().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
inline MutMap as_matrix(Tensor& t) {
  return {t.storage().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
}  // namespace detail

/// Record of primitive operations from one forward pass. Values are computed
/// eagerly as operations are recorded; backward() walks the record in reverse
/// and accumulates gradients into trainable parameters and variables.
///
/// Nodes whose inputs are all constants or frozen parameters carry no gradient
/// and are skipped during backward.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return push(Op::Constant, {}, 0.0, std::move(value), false); }

  /// Leaf whose gradient is retained and readable through grad().
  Var variable(Tensor value) { return push(Op::Variable, {}, 0.0, std::move(value), true); }

  /// Leaf bound to `params[index]`. When `trainable`, backward() accumulates
  /// into the parameter's grad tensor.
  Var parameter(ParameterSet& params, std::size_t index, bool trainable) {
    auto v = push(Op::Parameter, {}, 0.0, params[index].value, trainable);
    nodes_.back().params = &params;
    nodes_.back().param_index = index;
    return v;
  }

  Var record(Op op, std::initializer_list<Var> inputs, double attr = 0.0, double attr2 = 1.0) {
    return record(op, std::vector<Var>(inputs), attr, attr2);
  }

  Var record(Op op, const std::vector<Var>& inputs, double attr = 0.0, double attr2 = 1.0) {
    Node node;
    node.op = op;
    node.attr = attr;
    node.attr2 = attr2;
    node.inputs.reserve(inputs.size());
    for (const auto& in : inputs) {
      if (in.tape() != this) throw StateError(std::string(op_name(op)) + ": input recorded on a different tape");
      node.inputs.push_back(in.id());
      node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    compute(node);
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  void clear() { nodes_.clear(); }

  const Tensor& value(Var v) const { return nodes_.at(v.id()).value; }
  Op op(std::size_t i) const { return nodes_.at(i).op; }
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }

  /// Gradient of the last backward() seed w.r.t. a Variable leaf (zeros if
  /// the leaf did not influence the output).
  Tensor grad(Var v) const {
    const auto& n = nodes_.at(v.id());
    if (n.grad.empty()) return Tensor(n.value.shape(), 0.0);
    return n.grad;
  }

  /// Propagates `seed` (shape of `output`) back through the record.
  /// Parameter gradients are accumulated (+=), so callers zero them first.
  void backward(Var output, const Tensor& seed) {
    if (nodes_.empty()) throw StateError("backward called on an empty tape (no forward pass recorded)");
    if (output.tape() != this) throw StateError("backward: output belongs to a different tape");
    auto& out = nodes_.at(output.id());
    if (seed.shape() != out.value.shape()) {
      throw ShapeError("seed", "backward seed shape " + shape_string(seed.shape()) + " does not match output shape " +
                                   shape_string(out.value.shape()));
    }
    for (auto& n : nodes_) n.grad = Tensor();
    if (!out.requires_grad) return;
    out.grad = seed;
    for (std::size_t i = output.id() + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.op == Op::Parameter) {
        auto& dst = (*n.params)[n.param_index].grad.storage();
        const auto& g = n.grad.storage();
        for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
      } else if (n.op != Op::Variable && n.op != Op::Constant) {
        backprop(n);
      }
    }
  }

  /// Recomputes every non-leaf value in recording order. Parameter leaves are
  /// re-read from their ParameterSet, so replay after an in-place parameter
  /// change yields the perturbed forward value.
  void replay() {
    for (auto& n : nodes_) {
      if (n.op == Op::Parameter) {
        n.value = (*n.params)[n.param_index].value;
      } else if (n.op != Op::Constant && n.op != Op::Variable) {
        compute(n);
      }
    }
  }

 private:
  struct Node {
    Op op = Op::Constant;
    std::vector<std::uint32_t> inputs;
    double attr = 0.0;
    double attr2 = 1.0;  // softmax: total mass of each group
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    ParameterSet* params = nullptr;
    std::size_t param_index = 0;
  };

  Var push(Op op, std::vector<std::uint32_t> inputs, double attr, Tensor value, bool requires_grad) {
    Node n;
    n.op = op;
    n.inputs = std::move(inputs);
    n.attr = attr;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
  }

  const Tensor& in(const Node& n, std::size_t k) const { return nodes_[n.inputs[k]].value; }

  Tensor& grad_of(std::uint32_t id) {
    auto& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
  }

  static void require(bool ok, Op op, const std::string& what) {
    if (!ok) throw ShapeError(op_name(op), std::string(op_name(op)) + ": " + what);
  }

  static void require_same(const Tensor& a, const Tensor& b, Op op) {
    require(a.shape() == b.shape(), op,
            "operand shapes differ " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }

  // Softmax groups: `groups` independent slices of `len` entries, entry k of
  // group g at offset base(g) + k * stride.
  struct SoftmaxLayout {
    std::size_t groups, len, stride;
    std::size_t base(std::size_t g) const { return stride == 1 ? g * len : g; }
  };

  static SoftmaxLayout softmax_layout(const Tensor& t, int axis, Op op) {
    if (t.rank() == 1) {
      require(axis == 0, op, "rank-1 softmax needs axis 0");
      return {1, t.size(), 1};
    }
    require(t.rank() == 2 && (axis == 0 || axis == 1), op, "softmax needs rank 1 or 2 and axis 0 or 1");
    if (axis == 0) return {t.cols(), t.rows(), t.cols()};
    return {t.rows(), t.cols(), 1};
  }

  void compute(Node& n) const {
    using detail::as_matrix;
    switch (n.op) {
      case Op::Constant:
      case Op::Variable:
      case Op::Parameter:
        return;
      case Op::MatMul: {
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        require(a.rank() == 2 && b.rank() == 2 && a.cols() == b.rows(), n.op,
                "cannot multiply " + shape_string(a.shape()) + " by " + shape_string(b.shape()));
        n.value = Tensor({a.rows(), b.cols()});
        as_matrix(n.value).noalias() = as_matrix(a) * as_matrix(b);
        return;
      }
      case Op::AddBias: {
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        require(a.rank() == 2 && b.rank() == 1 && b.size() == a.cols(), n.op,
                "bias " + shape_string(b.shape()) + " does not fit " + shape_string(a.shape()));
        n.value = a;
        const auto c = a.cols();
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t j = 0; j < c; ++j) n.value[r * c + j] += b[j];
        return;
      }
      case Op::Add:
      case Op::Sub:
      case Op::Mul: {
        const auto& a = in(n, 0);
        const auto& b = in(n, 1);
        require_same(a, b, n.op);
        n.value = a;
        for (std::size_t k = 0; k < a.size(); ++k) {
          if (n.op == Op::Add) n.value[k] += b[k];
          else if (n.op == Op::Sub) n.value[k] -= b[k];
          else n.value[k] *= b[k];
        }
        return;
      }
      case Op::Scale:
      case Op::AddScalar:
      case Op::Relu:
      case Op::LeakyRelu:
      case Op::Tanh:
      case Op::Sigmoid:
      case Op::Square: {
        n.value = in(n, 0);
        for (auto& v : n.value.storage()) v = unary(n.op, v, n.attr);
        return;
      }
      case Op::Softmax: {
        const auto& a = in(n, 0);
        const auto lay = softmax_layout(a, static_cast<int>(n.attr), n.op);
        n.value = a;
        for (std::size_t g = 0; g < lay.groups; ++g) {
          const auto b = lay.base(g);
          double mx = -std::numeric_limits<double>::infinity();
          for (std::size_t k = 0; k < lay.len; ++k) mx = std::max(mx, a[b + k * lay.stride]);
          double total = 0.0;
          for (std::size_t k = 0; k < lay.len; ++k) {
            const double e = std::exp(a[b + k * lay.stride] - mx);
            n.value[b + k * lay.stride] = e;
            total += e;
          }
          for (std::size_t k = 0; k < lay.len; ++k) {
            auto& v = n.value[b + k * lay.stride];
            v = n.attr2 == 1.0 ? v / total : (n.attr2 * v) / total;
          }
        }
        return;
      }
      case Op::Sum:
      case Op::Mean: {
        const auto& a = in(n, 0);
        double s = 0.0;
        for (double v : a.storage()) s += v;
        if (n.op == Op::Mean) s /= static_cast<double>(a.size());
        n.value = Tensor::scalar(s);
        return;
      }
      case Op::ConcatCols: {
        const auto rows = in(n, 0).rank() == 2 ? in(n, 0).rows() : 0;
        std::size_t cols = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const auto& t = in(n, k);
          require(t.rank() == 2 && t.rows() == rows, n.op, "inputs must be matrices with equal row counts");
          cols += t.cols();
        }
        n.value = Tensor({rows, cols});
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const auto& t = in(n, k);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < t.cols(); ++j) n.value(r, off + j) = t(r, j);
          off += t.cols();
        }
        return;
      }
      case Op::SpectralNorm: {
        const auto& w = in(n, 0);
        const auto& u = in(n, 1);
        require(w.rank() == 2 && u.size() == w.rows(), n.op,
                "u of length " + std::to_string(u.size()) + " does not match weight " + shape_string(w.shape()));
        const double sigma = sigma_of(w, u);
        n.value = w;
        if (sigma > 0.0) {
          for (auto& v : n.value.storage()) v /= sigma;
        }
        return;
      }
    }
  }

  static double unary(Op op, double x, double attr) {
    switch (op) {
      case Op::Scale: return attr * x;
      case Op::AddScalar: return x + attr;
      case Op::Relu: return x > 0.0 ? x : 0.0;
      case Op::LeakyRelu: return x > 0.0 ? x : attr * x;
      case Op::Tanh: return std::tanh(x);
      case Op::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
      case Op::Square: return x * x;
      default: return x;
    }
  }

  // ||W^T u||, the top-singular-value estimate for a unit u.
  static double sigma_of(const Tensor& w, const Tensor& u) {
    double s2 = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) acc += w(i, j) * u[i];
      s2 += acc * acc;
    }
    return std::sqrt(s2);
  }

  void backprop(Node& n) {
    using detail::as_matrix;
    const auto& g = n.grad;
    const auto needs = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };
    switch (n.op) {
      case Op::MatMul: {
        if (needs(0)) as_matrix(grad_of(n.inputs[0])).noalias() += as_matrix(g) * as_matrix(in(n, 1)).transpose();
        if (needs(1)) as_matrix(grad_of(n.inputs[1])).noalias() += as_matrix(in(n, 0)).transpose() * as_matrix(g);
        return;
      }
      case Op::AddBias: {
        if (needs(0)) accumulate(n.inputs[0], g);
        if (needs(1)) {
          auto& db = grad_of(n.inputs[1]);
          const auto c = g.cols();
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t j = 0; j < c; ++j) db[j] += g[r * c + j];
        }
        return;
      }
      case Op::Add:
        if (needs(0)) accumulate(n.inputs[0], g);
        if (needs(1)) accumulate(n.inputs[1], g);
        return;
      case Op::Sub:
        if (needs(0)) accumulate(n.inputs[0], g);
        if (needs(1)) {
          auto& d = grad_of(n.inputs[1]);
          for (std::size_t k = 0; k < g.size(); ++k) d[k] -= g[k];
        }
        return;
      case Op::Mul:
        for (std::size_t side = 0; side < 2; ++side) {
          if (!needs(side)) continue;
          const auto& other = in(n, 1 - side);
          auto& d = grad_of(n.inputs[side]);
          for (std::size_t k = 0; k < g.size(); ++k) d[k] += g[k] * other[k];
        }
        return;
      case Op::Scale:
      case Op::AddScalar:
      case Op::Relu:
      case Op::LeakyRelu:
      case Op::Tanh:
      case Op::Sigmoid:
      case Op::Square: {
        if (!needs(0)) return;
        const auto& x = in(n, 0);
        const auto& y = n.value;
        auto& d = grad_of(n.inputs[0]);
        for (std::size_t k = 0; k < g.size(); ++k) {
          double local = 1.0;
          switch (n.op) {
            case Op::Scale: local = n.attr; break;
            case Op::Relu: local = x[k] > 0.0 ? 1.0 : 0.0; break;
            case Op::LeakyRelu: local = x[k] > 0.0 ? 1.0 : n.attr; break;
            case Op::Tanh: local = 1.0 - y[k] * y[k]; break;
            case Op::Sigmoid: local = y[k] * (1.0 - y[k]); break;
            case Op::Square: local = 2.0 * x[k]; break;
            default: break;
          }
          d[k] += g[k] * local;
        }
        return;
      }
      case Op::Softmax: {
        if (!needs(0)) return;
        const auto& y = n.value;
        const auto lay = softmax_layout(y, static_cast<int>(n.attr), n.op);
        auto& d = grad_of(n.inputs[0]);
        for (std::size_t grp = 0; grp < lay.groups; ++grp) {
          const auto b = lay.base(grp);
          double dot = 0.0;
          for (std::size_t k = 0; k < lay.len; ++k) dot += g[b + k * lay.stride] * y[b + k * lay.stride];
          dot /= n.attr2;
          for (std::size_t k = 0; k < lay.len; ++k) {
            const auto idx = b + k * lay.stride;
            d[idx] += y[idx] * (g[idx] - dot);
          }
        }
        return;
      }
      case Op::Sum:
      case Op::Mean: {
        if (!needs(0)) return;
        auto& d = grad_of(n.inputs[0]);
        double s = g[0];
        if (n.op == Op::Mean) s /= static_cast<double>(d.size());
        for (auto& v : d.storage()) v += s;
        return;
      }
      case Op::ConcatCols: {
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const auto cols = in(n, k).cols();
          if (needs(k)) {
            auto& d = grad_of(n.inputs[k]);
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t j = 0; j < cols; ++j) d(r, j) += g(r, off + j);
          }
          off += cols;
        }
        return;
      }
      case Op::SpectralNorm: {
        if (!needs(0)) return;
        const auto& w = in(n, 0);
        const auto& u = in(n, 1);
        const double sigma = sigma_of(w, u);
        auto& d = grad_of(n.inputs[0]);
        if (!(sigma > 0.0)) {
          accumulate(n.inputs[0], g);
          return;
        }
        // d(W/s)/dW with s = ||W^T u||: (G - <G, W/s> u v^T) / s, v = W^T u / s.
        double inner = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) inner += g[k] * n.value[k];
        std::vector<double> v(w.cols(), 0.0);
        for (std::size_t i = 0; i < w.rows(); ++i)
          for (std::size_t j = 0; j < w.cols(); ++j) v[j] += w(i, j) * u[i];
        for (auto& vj : v) vj /= sigma;
        for (std::size_t i = 0; i < w.rows(); ++i)
          for (std::size_t j = 0; j < w.cols(); ++j) d(i, j) += (g(i, j) - inner * u[i] * v[j]) / sigma;
        return;
      }
      default:
        return;
    }
  }

  void accumulate(std::uint32_t id, const Tensor& g) {
    auto& d = grad_of(id);
    for (std::size_t k = 0; k < g.size(); ++k) d[k] += g[k];
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }
inline const Shape& Var::shape() const { return tape_->value(*this).shape(); }

// Primitive constructors. All operands must live on the same tape.

inline Var matmul(Var a, Var b) { return a.tape()->record(Op::MatMul, {a, b}); }
inline Var add_bias(Var a, Var bias) { return a.tape()->record(Op::AddBias, {a, bias}); }
inline Var operator+(Var a, Var b) { return a.tape()->record(Op::Add, {a, b}); }
inline Var operator-(Var a, Var b) { return a.tape()->record(Op::Sub, {a, b}); }
inline Var operator*(Var a, Var b) { return a.tape()->record(Op::Mul, {a, b}); }
inline Var scale(Var a, double c) { return a.tape()->record(Op::Scale, {a}, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator-(Var a) { return scale(a, -1.0); }
inline Var add_scalar(Var a, double c) { return a.tape()->record(Op::AddScalar, {a}, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }
inline Var relu(Var a) { return a.tape()->record(Op::Relu, {a}); }
inline Var leaky_relu(Var a, double slope = 0.2) { return a.tape()->record(Op::LeakyRelu, {a}, slope); }
inline Var tanh(Var a) { return a.tape()->record(Op::Tanh, {a}); }
inline Var sigmoid(Var a) { return a.tape()->record(Op::Sigmoid, {a}); }
inline Var softmax(Var a, int axis) { return a.tape()->record(Op::Softmax, {a}, static_cast<double>(axis)); }
/// Softmax rescaled so each group sums to `total` (total * e_k / sum e).
inline Var softmax(Var a, int axis, double total) {
  return a.tape()->record(Op::Softmax, {a}, static_cast<double>(axis), total);
}
inline Var sum(Var a) { return a.tape()->record(Op::Sum, {a}); }
inline Var mean(Var a) { return a.tape()->record(Op::Mean, {a}); }
inline Var square(Var a) { return a.tape()->record(Op::Square, {a}); }
inline Var concat_cols(const std::vector<Var>& parts) { return parts.at(0).tape()->record(Op::ConcatCols, parts); }

/// W / ||W^T u|| with u held constant (the gradient flows through the norm
/// but not through the power-iteration vector).
inline Var spectral_normalized(Var weight, Var u) { return weight.tape()->record(Op::SpectralNorm, {weight, u}); }

/// Elementwise |a|, expressed through two ReLUs.
inline Var abs(Var a) { return relu(a) + relu(-a); }

}  // namespace bwlab::ad
