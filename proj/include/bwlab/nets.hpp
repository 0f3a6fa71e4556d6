#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bwlab/autodiff/checkpoint.hpp"
#include "bwlab/autodiff/parameters.hpp"
#include "bwlab/autodiff/spectral.hpp"
#include "bwlab/autodiff/tape.hpp"
#include "bwlab/random.hpp"

namespace bwlab {

using ad::Tape;
using ad::Tensor;
using ad::Var;

/// Matrix with orthonormal columns (rows, if wider than tall), from the QR
/// factorization of a Gaussian draw.
inline Tensor orthogonal(std::size_t rows, std::size_t cols, RandomStream& rng, double gain = 1.0) {
  const auto big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd rm = qr.matrixQR();
  for (Eigen::Index c = 0; c < q.cols(); ++c)
    if (rm(c, c) < 0.0) q.col(c) = -q.col(c);
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = gain * (rows >= cols ? q(r, c) : q(c, r));
  return out;
}

/// Exact top singular value (test/diagnostic use).
inline double top_singular_value(const Tensor& w) {
  Eigen::MatrixXd m(w.rows(), w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) m(r, c) = w(r, c);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

struct LinearLayer {
  std::string name;
  std::size_t weight = 0;  // [in x out] in the owning ParameterSet
  std::size_t bias = 0;
  bool spectral = false;
  ad::SpectralState sn;
};

/// Parameter container with linear layers, optional spectral normalization,
/// and checkpoint support. Forward passes are read-only w.r.t. parameters.
class Network {
 public:
  explicit Network(std::string name) : params_(name) {}

  const std::string& name() const noexcept { return params_.prefix(); }
  ad::ParameterSet& params() noexcept { return params_; }
  const ad::ParameterSet& params() const noexcept { return params_; }
  const std::vector<LinearLayer>& layers() const noexcept { return layers_; }

  /// `iterations` power-iteration steps on every spectrally normalized layer.
  void refresh_spectral(int iterations = 1) {
    for (auto& l : layers_) {
      if (!l.spectral) continue;
      for (int i = 0; i < iterations; ++i) ad::power_iteration(params_[l.weight].value, l.sn);
    }
  }

  /// Weight matrices as the forward pass sees them (after normalization).
  std::vector<Tensor> effective_weights() const {
    std::vector<Tensor> out;
    for (const auto& l : layers_) out.push_back(effective_weight(l));
    return out;
  }

  Tensor effective_weight(const LinearLayer& l) const {
    const auto& w = params_[l.weight].value;
    if (!l.spectral) return w;
    const double sigma = ad::estimate_sigma(w, l.sn);
    Tensor out = w;
    if (sigma > 0.0)
      for (auto& v : out.storage()) v /= sigma;
    return out;
  }

  void zero_parameters() {
    for (auto& p : params_) p.value.fill(0.0);
  }

  void save(ad::Checkpoint& ckpt) const {
    ckpt.add(params_);
    for (const auto& l : layers_)
      if (l.spectral) ckpt.add(params_[l.weight].name + ".u", Tensor::vector(l.sn.u));
  }

  void load(const ad::Checkpoint& ckpt) {
    ckpt.load_into(params_);
    for (auto& l : layers_) {
      if (!l.spectral) continue;
      const auto key = params_[l.weight].name + ".u";
      const auto& u = ckpt.at(key);
      if (u.size() != l.sn.u.size()) throw ShapeError(key, "tensor '" + key + "' has the wrong length");
      l.sn.u = u.storage();
    }
  }

 protected:
  std::size_t add_linear(const std::string& name, std::size_t in, std::size_t out, RandomStream& rng, bool spectral,
                         double gain = 1.0) {
    LinearLayer l;
    l.name = name;
    l.weight = params_.add(name + ".w", orthogonal(in, out, rng, gain));
    l.bias = params_.add(name + ".b", Tensor({out}, 0.0));
    l.spectral = spectral;
    if (spectral) {
      std::vector<double> u(in);
      for (auto& v : u) v = rng.normal();
      l.sn = ad::SpectralState::from(std::move(u));
      for (int i = 0; i < 30; ++i) ad::power_iteration(params_[l.weight].value, l.sn);
    }
    layers_.push_back(std::move(l));
    return layers_.size() - 1;
  }

  Var linear(Tape& tape, std::size_t layer, Var x, bool trainable) {
    const auto& l = layers_[layer];
    Var w = tape.parameter(params_, l.weight, trainable);
    if (l.spectral) w = ad::spectral_normalized(w, tape.constant(Tensor::vector(l.sn.u)));
    return ad::add_bias(ad::matmul(x, w), tape.parameter(params_, l.bias, trainable));
  }

  ad::ParameterSet params_;
  std::vector<LinearLayer> layers_;
};

inline void check_batch(const Var& v, std::size_t cols, const std::string& what) {
  if (v.shape().size() != 2 || v.shape()[1] != cols) {
    throw ShapeError(what, what + " has shape " + ad::shape_string(v.shape()) + ", expected [m," +
                               std::to_string(cols) + "]");
  }
}

// ---------------------------------------------------------------------------

struct GeneratorConfig {
  std::size_t data_dim = 2;
  std::size_t noise_dim = 8;
  std::size_t hidden_width = 32;
  std::size_t n_residual_blocks = 2;
  bool spectral = false;
};

/// Noise-conditioned residual generator:
///   h = relu(in(x)), c = [h, embed(z)], c <- c + l2(relu(l1(c))) per block,
///   G(x, z) = x + out(relu(c)).
/// The additive skip makes a zeroed output layer the exact identity.
class Generator : public Network {
 public:
  Generator(std::string name, GeneratorConfig cfg, RandomStream& rng) : Network(std::move(name)), cfg_(cfg) {
    const auto h = cfg.hidden_width;
    in_ = add_linear("in", cfg.data_dim, h, rng, cfg.spectral);
    embed_ = add_linear("embed", cfg.noise_dim, h, rng, cfg.spectral);
    for (std::size_t b = 0; b < cfg.n_residual_blocks; ++b) {
      blocks_.push_back({add_linear("block" + std::to_string(b) + ".l1", 2 * h, 2 * h, rng, cfg.spectral),
                         add_linear("block" + std::to_string(b) + ".l2", 2 * h, 2 * h, rng, cfg.spectral)});
    }
    out_ = add_linear("out", 2 * h, cfg.data_dim, rng, cfg.spectral, 0.1);
  }

  const GeneratorConfig& config() const noexcept { return cfg_; }

  Var forward(Tape& tape, Var x, Var z, bool trainable) {
    check_batch(x, cfg_.data_dim, "generator input x");
    check_batch(z, cfg_.noise_dim, "generator noise z");
    if (x.shape()[0] != z.shape()[0]) throw ShapeError("z", "generator: x and z batch sizes differ");
    for (double v : z.value().storage()) {
      if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("generator noise must lie in [-1, 1]");
    }
    Var h = ad::relu(linear(tape, in_, x, trainable));
    Var e = linear(tape, embed_, z, trainable);
    Var c = ad::concat_cols({h, e});
    for (const auto& [l1, l2] : blocks_) c = c + linear(tape, l2, ad::relu(linear(tape, l1, c, trainable)), trainable);
    return x + linear(tape, out_, ad::relu(c), trainable);
  }

  Tensor transfer(const Tensor& x, const Tensor& z) {
    Tape tape;
    return forward(tape, tape.constant(x), tape.constant(z), false).value();
  }

  /// Output layer weights and bias to zero: G(x, z) = x for every z.
  void zero_output_layer() {
    params_[layers_[out_].weight].value.fill(0.0);
    params_[layers_[out_].bias].value.fill(0.0);
  }

  /// Noise embedding to zero: the output no longer depends on z.
  void zero_noise_pathway() {
    params_[layers_[embed_].weight].value.fill(0.0);
    params_[layers_[embed_].bias].value.fill(0.0);
  }

 private:
  GeneratorConfig cfg_;
  std::size_t in_ = 0, embed_ = 0, out_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> blocks_;
};

/// Uniform noise on [-1, 1]^d, one row per sample.
inline Tensor sample_noise(std::size_t m, std::size_t d, RandomStream& rng) {
  Tensor z({m, d});
  for (auto& v : z.storage()) v = rng.uniform(-1.0, 1.0);
  return z;
}

// ---------------------------------------------------------------------------

struct JointDiscConfig {
  std::size_t data_dim = 2;
  std::size_t branch_width = 32;
  std::size_t trunk_width = 64;
  std::size_t n_layers = 1;  // hidden trunk layers before the scalar output
  double slope = 0.2;
};

/// Critic on pairs (x, y). Two levels, each computing features of x alone,
/// of y alone, and of the concatenation of all previous-level features; the
/// trunk maps the final concatenation to a scalar. Every layer is
/// spectrally normalized.
class JointDiscriminator : public Network {
 public:
  JointDiscriminator(std::string name, JointDiscConfig cfg, RandomStream& rng) : Network(std::move(name)), cfg_(cfg) {
    const auto d = cfg.data_dim, bw = cfg.branch_width;
    for (int level = 0; level < 2; ++level) {
      const auto prefix = "level" + std::to_string(level);
      const auto in_single = level == 0 ? d : bw;
      const auto in_joint = level == 0 ? 2 * d : 4 * bw;
      levels_.push_back({add_linear(prefix + ".x", in_single, bw, rng, true),
                         add_linear(prefix + ".xy", in_joint, 2 * bw, rng, true),
                         add_linear(prefix + ".y", in_single, bw, rng, true)});
    }
    std::size_t in = 4 * bw;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
      trunk_.push_back(add_linear("trunk" + std::to_string(l), in, cfg.trunk_width, rng, true));
      in = cfg.trunk_width;
    }
    out_ = add_linear("out", in, 1, rng, true);
  }

  const JointDiscConfig& config() const noexcept { return cfg_; }

  /// m x 1 critic values.
  Var forward(Tape& tape, Var x, Var y, bool trainable) {
    check_batch(x, cfg_.data_dim, "discriminator input x");
    check_batch(y, cfg_.data_dim, "discriminator input y");
    if (x.shape()[0] != y.shape()[0]) throw ShapeError("y", "joint discriminator: x and y batch sizes differ");
    const auto act = [&](Var v) { return ad::leaky_relu(v, cfg_.slope); };
    Var fx = x, fy = y, fxy = ad::concat_cols({x, y});
    for (std::size_t level = 0; level < levels_.size(); ++level) {
      const auto& [lx, lxy, ly] = levels_[level];
      Var joint_in = level == 0 ? fxy : ad::concat_cols({fx, fxy, fy});
      Var nx = act(linear(tape, lx, fx, trainable));
      Var nxy = act(linear(tape, lxy, joint_in, trainable));
      Var ny = act(linear(tape, ly, fy, trainable));
      fx = nx;
      fxy = nxy;
      fy = ny;
    }
    Var h = ad::concat_cols({fx, fxy, fy});
    for (auto l : trunk_) h = act(linear(tape, l, h, trainable));
    return linear(tape, out_, h, trainable);
  }

  Tensor evaluate(const Tensor& x, const Tensor& y) {
    Tape tape;
    return forward(tape, tape.constant(x), tape.constant(y), false).value();
  }

  /// Upper bound on the Lipschitz constant in x with y held fixed, from the
  /// exact spectral norms of the effective (normalized) weights. Leaky-ReLU
  /// slopes are at most 1 and concatenation adds norms in quadrature.
  double lipschitz_bound_x() const {
    const auto norm = [&](std::size_t layer) { return top_singular_value(effective_weight(layers_[layer])); };
    double bx = 1.0, bxy = 1.0, by = 0.0;  // level-0 inputs: x, [x, y], y
    for (std::size_t level = 0; level < levels_.size(); ++level) {
      const auto& [lx, lxy, ly] = levels_[level];
      const double in_joint = level == 0 ? 1.0 : std::sqrt(bx * bx + bxy * bxy + by * by);
      const double nbx = norm(lx) * bx, nbxy = norm(lxy) * in_joint, nby = norm(ly) * by;
      bx = nbx;
      bxy = nbxy;
      by = nby;
    }
    double b = std::sqrt(bx * bx + bxy * bxy + by * by);
    for (auto l : trunk_) b *= norm(l);
    return b * norm(out_);
  }

 private:
  struct Level {
    std::size_t x, xy, y;
  };
  JointDiscConfig cfg_;
  std::vector<Level> levels_;
  std::vector<std::size_t> trunk_;
  std::size_t out_ = 0;
};

// ---------------------------------------------------------------------------

struct MarginalDiscConfig {
  std::size_t data_dim = 2;
  std::size_t width = 64;
  std::size_t n_layers = 2;  // hidden layers; 0 gives a linear critic
  double slope = 0.2;
};

/// Spectrally normalized MLP critic on single points.
class MarginalDiscriminator : public Network {
 public:
  MarginalDiscriminator(std::string name, MarginalDiscConfig cfg, RandomStream& rng)
      : Network(std::move(name)), cfg_(cfg) {
    std::size_t in = cfg.data_dim;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
      hidden_.push_back(add_linear("hidden" + std::to_string(l), in, cfg.width, rng, true));
      in = cfg.width;
    }
    out_ = add_linear("out", in, 1, rng, true);
  }

  const MarginalDiscConfig& config() const noexcept { return cfg_; }

  Var forward(Tape& tape, Var y, bool trainable) {
    check_batch(y, cfg_.data_dim, "discriminator input");
    Var h = y;
    for (auto l : hidden_) h = ad::leaky_relu(linear(tape, l, h, trainable), cfg_.slope);
    return linear(tape, out_, h, trainable);
  }

  Tensor evaluate(const Tensor& y) {
    Tape tape;
    return forward(tape, tape.constant(y), false).value();
  }

 private:
  MarginalDiscConfig cfg_;
  std::vector<std::size_t> hidden_;
  std::size_t out_ = 0;
};

// ---------------------------------------------------------------------------

enum class WeightStrategy { Concat, OneSided, Composite };

inline const char* to_string(WeightStrategy s) {
  switch (s) {
    case WeightStrategy::Concat: return "concat";
    case WeightStrategy::OneSided: return "one_sided";
    case WeightStrategy::Composite: return "composite";
  }
  return "?";
}

inline WeightStrategy parse_strategy(const std::string& s) {
  if (s == "concat") return WeightStrategy::Concat;
  if (s == "one_sided") return WeightStrategy::OneSided;
  if (s == "composite") return WeightStrategy::Composite;
  throw std::invalid_argument("unknown weight strategy '" + s + "'");
}

struct WeightNetConfig {
  WeightStrategy strategy = WeightStrategy::Composite;
  std::size_t data_dim = 2;
  std::size_t width = 32;
  std::size_t n_layers = 2;  // hidden layers; 0 gives a linear map
  double logit_scale = 4.0;  // fixed multiplier on the raw output
  bool spectral = true;
  double slope = 0.2;
};

/// Scalar-logit network; the input is a point, or a concatenated pair when
/// `input_dim` is twice the data dimension.
class WeightNet : public Network {
 public:
  WeightNet(std::string name, std::size_t input_dim, const WeightNetConfig& cfg, RandomStream& rng)
      : Network(std::move(name)), input_dim_(input_dim), cfg_(cfg) {
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
      hidden_.push_back(add_linear("hidden" + std::to_string(l), in, cfg.width, rng, cfg.spectral));
      in = cfg.width;
    }
    out_ = add_linear("out", in, 1, rng, cfg.spectral);
  }

  std::size_t input_dim() const noexcept { return input_dim_; }

  /// Raw m x 1 logits; normalization over the batch happens in weighting.
  Var logits(Tape& tape, Var input, bool trainable) {
    check_batch(input, input_dim_, "weight-network input");
    Var h = input;
    for (auto l : hidden_) h = ad::leaky_relu(linear(tape, l, h, trainable), cfg_.slope);
    Var out = linear(tape, out_, h, trainable);
    return cfg_.logit_scale == 1.0 ? out : ad::scale(out, cfg_.logit_scale);
  }

 private:
  std::size_t input_dim_;
  WeightNetConfig cfg_;
  std::vector<std::size_t> hidden_;
  std::size_t out_ = 0;
};

/// The weight network(s) of one strategy: Concat owns W on X x Y, OneSided
/// owns W on X, Composite owns W_x on X and W_y on Y.
class WeightNetworks {
 public:
  WeightNetworks(const WeightNetConfig& cfg, RandomStream& rng) : cfg_(cfg) {
    switch (cfg.strategy) {
      case WeightStrategy::Concat: primary_.emplace("w", 2 * cfg.data_dim, cfg, rng); break;
      case WeightStrategy::OneSided: primary_.emplace("w", cfg.data_dim, cfg, rng); break;
      case WeightStrategy::Composite:
        primary_.emplace("wx", cfg.data_dim, cfg, rng);
        secondary_.emplace("wy", cfg.data_dim, cfg, rng);
        break;
    }
  }

  WeightStrategy strategy() const noexcept { return cfg_.strategy; }
  const WeightNetConfig& config() const noexcept { return cfg_; }

  /// W (Concat, OneSided) or W_x (Composite).
  WeightNet& primary() { return *primary_; }
  const WeightNet& primary() const { return *primary_; }
  /// W_y; Composite only.
  WeightNet& secondary() {
    if (!secondary_) throw std::logic_error("strategy " + std::string(to_string(cfg_.strategy)) + " has no W_y network");
    return *secondary_;
  }
  const WeightNet& secondary() const {
    if (!secondary_) throw std::logic_error("strategy " + std::string(to_string(cfg_.strategy)) + " has no W_y network");
    return *secondary_;
  }
  bool has_secondary() const noexcept { return secondary_.has_value(); }

  std::vector<Network*> networks() {
    std::vector<Network*> out{&*primary_};
    if (secondary_) out.push_back(&*secondary_);
    return out;
  }

 private:
  WeightNetConfig cfg_;
  std::optional<WeightNet> primary_;
  std::optional<WeightNet> secondary_;
};

}  // namespace bwlab
