#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bwlab/autodiff/tensor.hpp"
#include "bwlab/error.hpp"
#include "bwlab/random.hpp"

namespace bwlab {

using ad::Tensor;

// ---------------------------------------------------------------------------
// Categorical case: masses of the correct joints on matched cells (i, i).

struct CategoricalPair {
  std::vector<double> p;  // P_xy on matched cells
  std::vector<double> q;  // Q_xy on matched cells

  std::size_t size() const noexcept { return p.size(); }
  CategoricalPair swapped() const { return {q, p}; }

  /// Throws SupportError on any non-positive mass (the shared-support
  /// assumption is broken) and invalid_argument on malformed vectors.
  void validate() const {
    if (p.empty() || p.size() != q.size()) {
      throw std::invalid_argument("categorical pair: mass vectors must be non-empty and of equal length");
    }
    for (const auto* v : {&p, &q}) {
      double total = 0.0;
      for (std::size_t i = 0; i < v->size(); ++i) {
        const double m = (*v)[i];
        if (!std::isfinite(m)) throw std::invalid_argument("categorical pair: non-finite mass");
        if (!(m > 0.0)) {
          throw SupportError("mass " + std::to_string(i) + " of the " + (v == &p ? std::string("p") : std::string("q")) +
                             " vector is zero: the measures must share support for the density ratio to exist");
        }
        total += m;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("categorical pair: masses sum to " + std::to_string(total) + ", not 1");
      }
    }
  }
};

/// Exact density ratio dQ/dP per cell.
inline std::vector<double> rn_oracle(const CategoricalPair& pair) {
  pair.validate();
  std::vector<double> w(pair.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = pair.q[i] / pair.p[i];
  return w;
}

/// M = (P + Q) / 2, checked against both reweighted sides
/// P (1 + w) / 2 and Q (1 + 1/w) / 2 to 1e-12.
inline std::vector<double> midpoint_oracle(const CategoricalPair& pair) {
  const auto w = rn_oracle(pair);
  std::vector<double> mid(pair.size());
  for (std::size_t i = 0; i < mid.size(); ++i) {
    mid[i] = 0.5 * (pair.p[i] + pair.q[i]);
    const double from_p = pair.p[i] * 0.5 * (1.0 + w[i]);
    const double from_q = pair.q[i] * 0.5 * (1.0 + 1.0 / w[i]);
    if (std::abs(from_p - mid[i]) > 1e-12 || std::abs(from_q - mid[i]) > 1e-12) {
      throw NumericalError("midpoint", "midpoint identity violated at cell " + std::to_string(i));
    }
  }
  return mid;
}

/// max_i |p_i (1 + w_i) / 2 - M_i| for the given weights.
inline double midpoint_residual(const CategoricalPair& pair, std::span<const double> w) {
  double worst = 0.0;
  for (std::size_t i = 0; i < pair.size(); ++i) {
    const double mid = 0.5 * (pair.p[i] + pair.q[i]);
    worst = std::max(worst, std::abs(pair.p[i] * 0.5 * (1.0 + w[i]) - mid));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Gaussian mixtures.

struct Mode {
  double mass = 1.0;
  std::vector<double> mean;
  Tensor covariance;  // D x D
  int label = 0;
};

class MixtureDomain {
 public:
  MixtureDomain() = default;

  explicit MixtureDomain(std::vector<Mode> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw std::invalid_argument("mixture domain needs at least one mode");
    dim_ = modes_.front().mean.size();
    if (dim_ == 0) throw std::invalid_argument("mixture domain: zero dimension");
    double total = 0.0;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      const auto& m = modes_[k];
      if (!(m.mass > 0.0 && m.mass <= 1.0)) {
        throw std::invalid_argument("mode " + std::to_string(m.label) + ": mass must lie in (0, 1]");
      }
      if (m.mean.size() != dim_ || m.covariance.shape() != ad::Shape{dim_, dim_}) {
        throw ShapeError("mode " + std::to_string(m.label), "mode dimensions are inconsistent");
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (modes_[j].label == m.label) throw std::invalid_argument("duplicate mode label " + std::to_string(m.label));
      }
      total += m.mass;

      Eigen::MatrixXd cov(dim_, dim_);
      for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < dim_; ++c) cov(r, c) = m.covariance(r, c);
      if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("mode " + std::to_string(m.label) + ": covariance is not symmetric");
      }
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("mode " + std::to_string(m.label) + ": covariance is not positive definite");
      }
      Eigen::MatrixXd l = llt.matrixL();
      chol_.push_back(l);
      double logdet = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) logdet += 2.0 * std::log(l(d, d));
      log_norm_.push_back(-0.5 * (static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) + logdet));
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("mixture masses sum to " + std::to_string(total) + ", not 1");
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return modes_.size(); }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  const Mode& mode(std::size_t k) const { return modes_.at(k); }

  std::vector<double> masses() const {
    std::vector<double> out;
    for (const auto& m : modes_) out.push_back(m.mass);
    return out;
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    for (const auto& m : modes_) out.push_back(m.label);
    return out;
  }

  std::size_t index_of(int label) const {
    for (std::size_t k = 0; k < modes_.size(); ++k)
      if (modes_[k].label == label) return k;
    throw std::out_of_range("no mode with label " + std::to_string(label));
  }

  /// log N(x; mean_k, cov_k), without the mixture mass.
  double log_component(std::size_t k, std::span<const double> x) const {
    Eigen::VectorXd diff(dim_);
    for (std::size_t d = 0; d < dim_; ++d) diff(d) = x[d] - modes_[k].mean[d];
    const Eigen::VectorXd z = chol_[k].triangularView<Eigen::Lower>().solve(diff);
    return log_norm_[k] - 0.5 * z.squaredNorm();
  }

  /// Draws mean_k + L_k e with e standard normal.
  void draw(std::size_t k, RandomStream& rng, std::span<double> out) const {
    std::vector<double> e(dim_);
    for (auto& v : e) v = rng.normal();
    for (std::size_t r = 0; r < dim_; ++r) {
      double acc = modes_[k].mean[r];
      for (std::size_t c = 0; c <= r; ++c) acc += chol_[k](r, c) * e[c];
      out[r] = acc;
    }
  }

 private:
  std::vector<Mode> modes_;
  std::size_t dim_ = 0;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<double> log_norm_;
};

struct LabeledBatch {
  Tensor points;            // m x D
  std::vector<int> labels;  // evaluation only
};

inline LabeledBatch sample_batch(const MixtureDomain& domain, std::size_t m, RandomStream& rng) {
  if (m == 0) throw std::invalid_argument("sample_batch: batch size must be positive");
  LabeledBatch batch{Tensor({m, domain.dim()}), std::vector<int>(m)};
  const auto masses = domain.masses();
  for (std::size_t i = 0; i < m; ++i) {
    const auto k = rng.categorical(masses);
    batch.labels[i] = domain.mode(k).label;
    domain.draw(k, rng, batch.points.data().subspan(i * domain.dim(), domain.dim()));
  }
  return batch;
}

/// Exact mixture density at x.
inline double density(const MixtureDomain& domain, std::span<const double> x) {
  double p = 0.0;
  for (std::size_t k = 0; k < domain.size(); ++k) p += domain.mode(k).mass * std::exp(domain.log_component(k, x));
  return p;
}

// ---------------------------------------------------------------------------
// Domain pairs and presets.

struct DomainPair {
  std::string name;
  MixtureDomain source;
  MixtureDomain target;
  std::map<int, int> correspondence;  // source label -> target label

  void validate() const {
    if (source.size() != target.size()) throw std::invalid_argument("domain pair: label sets differ in size");
    if (source.dim() != target.dim()) throw std::invalid_argument("domain pair: dimensions differ");
    if (correspondence.size() != source.size()) throw std::invalid_argument("correspondence must cover every source label");
    std::vector<int> seen;
    for (const auto& [s, t] : correspondence) {
      source.index_of(s);
      target.index_of(t);
      if (std::find(seen.begin(), seen.end(), t) != seen.end()) {
        throw std::invalid_argument("correspondence is not a bijection (target label " + std::to_string(t) + ")");
      }
      seen.push_back(t);
    }
  }

  int counterpart(int source_label) const { return correspondence.at(source_label); }

  int preimage(int target_label) const {
    for (const auto& [s, t] : correspondence)
      if (t == target_label) return s;
    throw std::out_of_range("no source label maps to " + std::to_string(target_label));
  }

  /// Source masses and their counterparts' target masses, in source-mode order.
  CategoricalPair categorical() const {
    CategoricalPair pair;
    for (const auto& m : source.modes()) {
      pair.p.push_back(m.mass);
      pair.q.push_back(target.mode(target.index_of(counterpart(m.label))).mass);
    }
    return pair;
  }
};

namespace presets {

inline constexpr double kRadius = 4.0;
inline constexpr double kSourceStd = 0.3;

inline Tensor isotropic(std::size_t dim, double std) {
  Tensor c({dim, dim}, 0.0);
  for (std::size_t d = 0; d < dim; ++d) c(d, d) = std * std;
  return c;
}

/// K modes evenly spaced on the circle of radius 4, isotropic spread.
inline std::vector<Mode> circle(const std::vector<double>& masses) {
  std::vector<Mode> modes;
  const auto k_total = masses.size();
  for (std::size_t k = 0; k < k_total; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(k_total);
    modes.push_back({masses[k], {kRadius * std::cos(th), kRadius * std::sin(th)}, isotropic(2, kSourceStd),
                     static_cast<int>(k)});
  }
  return modes;
}

/// Deterministic per-mode affine distortion of `modes`: a small rotation
/// about the origin, radial shrink, off-centre shift and an anisotropic,
/// rotated covariance. Matched modes stay nearest to each other.
inline std::vector<Mode> distorted(std::vector<Mode> modes, const std::vector<double>& masses) {
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const double kd = static_cast<double>(k);
    const double angle = std::numbers::pi / 36.0 + (std::numbers::pi / 90.0) * std::sin(1.7 * kd + 0.3);
    const double shrink = 0.9 + 0.05 * std::cos(2.1 * kd);
    const double c = std::cos(angle), s = std::sin(angle);
    const double mx = shrink * modes[k].mean[0], my = shrink * modes[k].mean[1];
    modes[k].mean = {c * mx - s * my + 0.1 * std::cos(3.0 * kd), s * mx + c * my + 0.1 * std::sin(3.0 * kd)};
    // R diag(a^2, b^2) R^T
    const double a = kSourceStd, b = 0.7 * kSourceStd;
    Tensor cov({2, 2});
    cov(0, 0) = c * c * a * a + s * s * b * b;
    cov(1, 1) = s * s * a * a + c * c * b * b;
    cov(0, 1) = cov(1, 0) = c * s * (a * a - b * b);
    modes[k].covariance = cov;
    modes[k].mass = masses[k];
  }
  return modes;
}

inline DomainPair make(std::string name, const std::vector<double>& source_masses,
                       const std::vector<double>& target_masses) {
  DomainPair pair;
  pair.name = std::move(name);
  pair.source = MixtureDomain(circle(source_masses));
  pair.target = MixtureDomain(distorted(circle(source_masses), target_masses));
  for (std::size_t k = 0; k < source_masses.size(); ++k) pair.correspondence[static_cast<int>(k)] = static_cast<int>(k);
  pair.validate();
  return pair;
}

inline std::vector<double> uniform(std::size_t k) { return std::vector<double>(k, 1.0 / static_cast<double>(k)); }

/// One mode carrying `heavy`, the rest sharing 1 - heavy equally.
inline std::vector<double> skewed(std::size_t k, std::size_t heavy_index, double heavy) {
  std::vector<double> m(k, (1.0 - heavy) / static_cast<double>(k - 1));
  m[heavy_index] = heavy;
  return m;
}

/// Categories embedded as tight clusters on a unit circle, identical
/// locations on both sides; masses p (source) and q (target).
inline DomainPair categorical_embedding(const std::vector<double>& p, const std::vector<double>& q,
                                       double std = 0.05) {
  if (p.size() != q.size()) throw std::invalid_argument("categorical_embedding: p and q differ in length");
  std::vector<Mode> src, tgt;
  const auto k_total = p.size();
  for (std::size_t k = 0; k < k_total; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(k_total);
    Mode mode{p[k], {std::cos(a), std::sin(a)}, isotropic(2, std), static_cast<int>(k)};
    src.push_back(mode);
    mode.mass = q[k];
    tgt.push_back(mode);
  }
  DomainPair pair;
  pair.name = "categorical";
  pair.source = MixtureDomain(std::move(src));
  pair.target = MixtureDomain(std::move(tgt));
  for (std::size_t k = 0; k < k_total; ++k) pair.correspondence[static_cast<int>(k)] = static_cast<int>(k);
  pair.validate();
  return pair;
}

}  // namespace presets

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"srmnist2d", "twoclass-skew", "balanced", "mnist-svhn-like",
                                                  "categorical"};
  return names;
}

/// Named synthetic domain pairs (2-D). All but `categorical` place modes on a
/// circle of radius 4.
inline DomainPair make_preset(std::string_view name) {
  using namespace presets;
  if (name == "srmnist2d") return make("srmnist2d", uniform(10), skewed(10, 0, 0.5));
  if (name == "twoclass-skew") return make("twoclass-skew", {0.26, 0.74}, {0.9, 0.1});
  if (name == "balanced") return make("balanced", uniform(10), uniform(10));
  if (name == "mnist-svhn-like") return make("mnist-svhn-like", uniform(10), skewed(10, 1, 0.2));
  if (name == "categorical") return categorical_embedding({0.5, 0.5}, {0.2, 0.8});
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

/// Same geometry as `pair` with replaced masses (validated).
inline DomainPair with_masses(const DomainPair& pair, const std::vector<double>& source_masses,
                              const std::vector<double>& target_masses) {
  auto reweight = [](const MixtureDomain& d, const std::vector<double>& masses) {
    if (masses.empty()) return d;
    if (masses.size() != d.size()) throw std::invalid_argument("mass override has the wrong number of modes");
    auto modes = d.modes();
    for (std::size_t k = 0; k < modes.size(); ++k) modes[k].mass = masses[k];
    return MixtureDomain(std::move(modes));
  };
  DomainPair out = pair;
  out.source = reweight(pair.source, source_masses);
  out.target = reweight(pair.target, target_masses);
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Structured-text (JSON) form of a domain pair.

inline nlohmann::json to_json(const MixtureDomain& d) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : d.modes()) {
    nlohmann::json cov = nlohmann::json::array();
    for (std::size_t r = 0; r < d.dim(); ++r) cov.push_back(m.covariance.row(r));
    modes.push_back({{"label", m.label}, {"mass", m.mass}, {"mean", m.mean}, {"covariance", cov}});
  }
  return {{"modes", modes}};
}

inline MixtureDomain mixture_from_json(const nlohmann::json& j) {
  std::vector<Mode> modes;
  for (const auto& jm : j.at("modes")) {
    Mode m;
    m.label = jm.at("label").get<int>();
    m.mass = jm.at("mass").get<double>();
    m.mean = jm.at("mean").get<std::vector<double>>();
    const auto rows = jm.at("covariance").get<std::vector<std::vector<double>>>();
    m.covariance = Tensor({rows.size(), rows.empty() ? 1 : rows[0].size()});
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c) m.covariance(r, c) = rows[r][c];
    modes.push_back(std::move(m));
  }
  return MixtureDomain(std::move(modes));
}

inline nlohmann::json to_json(const DomainPair& pair) {
  nlohmann::json corr = nlohmann::json::array();
  for (const auto& [s, t] : pair.correspondence) corr.push_back({s, t});
  return {{"name", pair.name}, {"source", to_json(pair.source)}, {"target", to_json(pair.target)}, {"correspondence", corr}};
}

inline DomainPair domain_pair_from_json(const nlohmann::json& j) {
  DomainPair pair;
  pair.name = j.value("name", "custom");
  pair.source = mixture_from_json(j.at("source"));
  pair.target = mixture_from_json(j.at("target"));
  for (const auto& e : j.at("correspondence")) pair.correspondence[e.at(0).get<int>()] = e.at(1).get<int>();
  pair.validate();
  return pair;
}

}  // namespace bwlab
