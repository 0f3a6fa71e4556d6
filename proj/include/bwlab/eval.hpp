#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bwlab/domains.hpp"
#include "bwlab/nets.hpp"
#include "bwlab/training.hpp"

namespace bwlab {

/// Label of the mode with the largest mass-weighted density; ties go to the
/// lowest label.
inline int mode_assign(std::span<const double> x, const MixtureDomain& domain) {
  int best_label = 0;
  double best = -std::numeric_limits<double>::infinity();
  bool first = true;
  for (std::size_t k = 0; k < domain.size(); ++k) {
    const auto& mode = domain.mode(k);
    const double score = std::log(mode.mass) + domain.log_component(k, x);
    if (first || score > best || (score == best && mode.label < best_label)) {
      best = score;
      best_label = mode.label;
      first = false;
    }
  }
  return best_label;
}

inline std::vector<int> mode_assign(const Tensor& points, const MixtureDomain& domain) {
  std::vector<int> out(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) out[i] = mode_assign(points.row(i), domain);
  return out;
}

/// Transfers `points` in chunks with fresh noise from `noise`.
inline Tensor transfer(Generator& g, const Tensor& points, RandomStream& noise, std::size_t chunk = 1024) {
  const auto n = points.rows(), d = points.cols();
  Tensor out({n, d});
  for (std::size_t start = 0; start < n; start += chunk) {
    const auto len = std::min(chunk, n - start);
    Tensor part({len, d});
    std::copy_n(points.storage().begin() + static_cast<std::ptrdiff_t>(start * d), len * d, part.storage().begin());
    const auto res = g.transfer(part, sample_noise(len, g.config().noise_dim, noise));
    std::copy(res.storage().begin(), res.storage().end(), out.storage().begin() + static_cast<std::ptrdiff_t>(start * d));
  }
  return out;
}

enum class Direction { XY, YX };

/// Fraction of n fresh samples whose transferred point lands in the
/// corresponding mode of the other domain.
inline double transfer_accuracy(Generator& g, const DomainPair& pair, Direction dir, std::size_t n, RandomStream& rng) {
  const auto& from = dir == Direction::XY ? pair.source : pair.target;
  const auto& to = dir == Direction::XY ? pair.target : pair.source;
  const auto batch = sample_batch(from, n, rng);
  const auto assigned = mode_assign(transfer(g, batch.points, rng), to);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int want = dir == Direction::XY ? pair.counterpart(batch.labels[i]) : pair.preimage(batch.labels[i]);
    hits += assigned[i] == want;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

/// Empirical mode frequencies (in `to` mode order) of n transferred samples.
inline std::vector<double> pushforward_masses(Generator& g, const MixtureDomain& from, const MixtureDomain& to,
                                              std::size_t n, RandomStream& rng) {
  const auto batch = sample_batch(from, n, rng);
  const auto assigned = mode_assign(transfer(g, batch.points, rng), to);
  std::vector<double> out(to.size(), 0.0);
  for (int label : assigned) out[to.index_of(label)] += 1.0;
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

/// Fraction of round trips from `domain` that return to the original mode.
inline double round_trip_consistency(Generator& there, Generator& back, const MixtureDomain& domain, std::size_t n,
                                     RandomStream& rng) {
  const auto batch = sample_batch(domain, n, rng);
  const auto mid = transfer(there, batch.points, rng);
  const auto assigned = mode_assign(transfer(back, mid, rng), domain);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += assigned[i] == batch.labels[i];
  return static_cast<double>(hits) / static_cast<double>(n);
}

/// Mode-level cycle consistency: the smaller of the x -> y -> x and
/// y -> x -> y round-trip rates.
inline double cycle_mode_consistency(Generator& gxy, Generator& gyx, const DomainPair& pair, std::size_t n,
                                     RandomStream& rng) {
  const double x_side = round_trip_consistency(gxy, gyx, pair.source, n, rng);
  const double y_side = round_trip_consistency(gyx, gxy, pair.target, n, rng);
  return std::min(x_side, y_side);
}

// ---------------------------------------------------------------------------

/// Exponentially smoothed series per log column, aligned with the log's
/// step column.
struct WeightTrajectories {
  std::vector<double> steps;
  std::map<std::string, std::vector<double>> series;

  const std::vector<double>& at(const std::string& name) const {
    const auto it = series.find(name);
    if (it == series.end()) throw std::out_of_range("no trajectory '" + name + "'");
    return it->second;
  }
};

/// e_0 = v_0, e_t = s e_{t-1} + (1 - s) v_t. NaN entries (mode absent from
/// the batch) carry the previous value forward.
inline std::vector<double> ema(const std::vector<double>& v, double smoothing) {
  if (!(smoothing > 0.0 && smoothing < 1.0)) throw std::invalid_argument("smoothing must lie in (0, 1)");
  std::vector<double> out(v.size(), std::numeric_limits<double>::quiet_NaN());
  double e = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isnan(v[i])) e = std::isnan(e) ? v[i] : smoothing * e + (1.0 - smoothing) * v[i];
    out[i] = e;
  }
  return out;
}

inline WeightTrajectories weight_trajectories(const RunLog& log, double smoothing = 0.99) {
  if (log.empty()) throw std::invalid_argument("weight_trajectories: run log is empty");
  WeightTrajectories t;
  t.steps = log.column("step");
  for (const auto& c : log.columns()) {
    if (c.find("_mode_") == std::string::npos) continue;
    t.series[c] = ema(log.column(c), smoothing);
  }
  return t;
}

/// Long-format CSV: step,series,value.
inline void write_trajectories_csv(std::ostream& os, const WeightTrajectories& t) {
  os << "step,series,value\n";
  for (std::size_t i = 0; i < t.steps.size(); ++i)
    for (const auto& [name, s] : t.series) os << RunLog::format(t.steps[i]) << ',' << name << ',' << RunLog::format(s[i]) << '\n';
}

/// max_k |p_k fx_k - M_k| + max_k |q_k fy_k - M_k|, with fx_k and fy_k the
/// mean midpoint factors of source mode k and of its counterpart.
inline double midpoint_match_error(const CategoricalPair& pq, std::span<const double> fx, std::span<const double> fy) {
  if (fx.size() != pq.size() || fy.size() != pq.size()) throw std::invalid_argument("midpoint_match_error: size mismatch");
  const auto mid = midpoint_oracle(pq);
  double ex = 0.0, ey = 0.0;
  for (std::size_t k = 0; k < pq.size(); ++k) {
    ex = std::max(ex, std::abs(pq.p[k] * fx[k] - mid[k]));
    ey = std::max(ey, std::abs(pq.q[k] * fy[k] - mid[k]));
  }
  return ex + ey;
}

/// Same, with factors taken from the final smoothed trajectories of a log.
inline double midpoint_match_error(const RunLog& log, const DomainPair& pair, double smoothing = 0.99) {
  const auto t = weight_trajectories(log, smoothing);
  std::vector<double> fx, fy;
  for (const auto& m : pair.source.modes()) {
    fx.push_back(t.at("fx_mode_" + std::to_string(m.label)).back());
    fy.push_back(t.at("fy_mode_" + std::to_string(pair.counterpart(m.label))).back());
  }
  return midpoint_match_error(pair.categorical(), fx, fy);
}

// ---------------------------------------------------------------------------

/// k_source x k_noise grid: entry (i, j) is source i transferred with noise j.
struct NoiseSweep {
  Tensor sources;  // k_source x D
  std::vector<int> source_labels;
  Tensor noise;   // k_noise x d
  Tensor points;  // (k_source * k_noise) x D, row i * k_noise + j

  std::size_t k_source() const { return sources.rows(); }
  std::size_t k_noise() const { return noise.rows(); }
  std::vector<double> at(std::size_t i, std::size_t j) const { return points.row(i * k_noise() + j); }
};

inline NoiseSweep fixed_noise_sweep(Generator& g, const MixtureDomain& domain, std::size_t k_noise,
                                    std::size_t k_source, RandomStream& rng) {
  if (k_noise == 0 || k_source == 0) throw std::invalid_argument("fixed_noise_sweep needs a non-empty grid");
  NoiseSweep s;
  auto batch = sample_batch(domain, k_source, rng);
  s.sources = batch.points;
  s.source_labels = batch.labels;
  s.noise = sample_noise(k_noise, g.config().noise_dim, rng);
  const auto d = domain.dim(), nd = g.config().noise_dim;
  Tensor xs({k_source * k_noise, d}), zs({k_source * k_noise, nd});
  for (std::size_t i = 0; i < k_source; ++i)
    for (std::size_t j = 0; j < k_noise; ++j) {
      const auto r = i * k_noise + j;
      for (std::size_t c = 0; c < d; ++c) xs(r, c) = s.sources(i, c);
      for (std::size_t c = 0; c < nd; ++c) zs(r, c) = s.noise(j, c);
    }
  s.points = g.transfer(xs, zs);
  return s;
}

/// Fraction of sweep rows (fixed source) whose transferred points all share
/// one mode label in `target`.
inline double row_label_constancy(const NoiseSweep& s, const MixtureDomain& target) {
  std::size_t constant = 0;
  for (std::size_t i = 0; i < s.k_source(); ++i) {
    const int first = mode_assign(s.at(i, 0), target);
    bool same = true;
    for (std::size_t j = 1; j < s.k_noise() && same; ++j) same = mode_assign(s.at(i, j), target) == first;
    constant += same;
  }
  return static_cast<double>(constant) / static_cast<double>(s.k_source());
}

inline void write_sweep_csv(std::ostream& os, const NoiseSweep& s, const MixtureDomain& target) {
  os << "source_id,noise_id,source_label,assigned_label";
  for (std::size_t c = 0; c < s.points.cols(); ++c) os << ",x" << c;
  os << '\n';
  for (std::size_t i = 0; i < s.k_source(); ++i)
    for (std::size_t j = 0; j < s.k_noise(); ++j) {
      const auto p = s.at(i, j);
      os << i << ',' << j << ',' << s.source_labels[i] << ',' << mode_assign(p, target);
      for (double v : p) os << ',' << RunLog::format(v);
      os << '\n';
    }
}

// ---------------------------------------------------------------------------

struct EvalReport {
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  double transfer_accuracy_xy = kMissing;
  double transfer_accuracy_yx = kMissing;
  std::vector<double> pushforward_xy;  // target-mode order
  std::vector<double> pushforward_yx;  // source-mode order
  double midpoint_error = kMissing;
  double cycle_mode_consistency = kMissing;
  std::size_t n_eval = 0;
  std::size_t step = 0;

  nlohmann::json to_json() const {
    const auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    return {{"transfer_accuracy_xy", num(transfer_accuracy_xy)},
            {"transfer_accuracy_yx", num(transfer_accuracy_yx)},
            {"pushforward_masses_xy", pushforward_xy},
            {"pushforward_masses_yx", pushforward_yx},
            {"midpoint_error", num(midpoint_error)},
            {"cycle_mode_consistency", num(cycle_mode_consistency)},
            {"n_eval", n_eval},
            {"step", step}};
  }

  static EvalReport from_json(const nlohmann::json& j) {
    const auto num = [&](const char* k) { return j.at(k).is_null() ? kMissing : j.at(k).get<double>(); };
    EvalReport r;
    r.transfer_accuracy_xy = num("transfer_accuracy_xy");
    r.transfer_accuracy_yx = num("transfer_accuracy_yx");
    r.pushforward_xy = j.at("pushforward_masses_xy").get<std::vector<double>>();
    r.pushforward_yx = j.at("pushforward_masses_yx").get<std::vector<double>>();
    r.midpoint_error = num("midpoint_error");
    r.cycle_mode_consistency = num("cycle_mode_consistency");
    r.n_eval = j.at("n_eval").get<std::size_t>();
    r.step = j.at("step").get<std::size_t>();
    return r;
  }

  static std::string summary_header() {
    return "run,step,n_eval,transfer_accuracy_xy,transfer_accuracy_yx,cycle_mode_consistency,midpoint_error,"
           "pushforward_xy_max_dev_from_source";
  }

  std::string summary_row(const std::string& run, const DomainPair& pair) const {
    double dev = kMissing;
    if (pushforward_xy.size() == pair.source.size()) {
      dev = 0.0;
      for (const auto& m : pair.source.modes())
        dev = std::max(dev, std::abs(pushforward_xy[pair.target.index_of(pair.counterpart(m.label))] - m.mass));
    }
    std::string out = run + "," + std::to_string(step) + "," + std::to_string(n_eval);
    for (double v : {transfer_accuracy_xy, transfer_accuracy_yx, cycle_mode_consistency, midpoint_error, dev})
      out += "," + RunLog::format(v);
    return out;
  }
};

/// Evaluates the current state of a trainer on fresh samples from the
/// `eval` stream of `seed`. Quantities needing a missing generator or an
/// empty log stay NaN.
inline EvalReport evaluate(Trainer& trainer, std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed, "eval");
  auto& st = trainer.state();
  const auto& pair = trainer.pair();
  EvalReport r;
  r.n_eval = n;
  r.step = st.step;
  r.transfer_accuracy_xy = transfer_accuracy(*st.gxy, pair, Direction::XY, n, rng);
  r.pushforward_xy = pushforward_masses(*st.gxy, pair.source, pair.target, n, rng);
  if (st.gyx) {
    r.transfer_accuracy_yx = transfer_accuracy(*st.gyx, pair, Direction::YX, n, rng);
    r.pushforward_yx = pushforward_masses(*st.gyx, pair.target, pair.source, n, rng);
    r.cycle_mode_consistency = cycle_mode_consistency(*st.gxy, *st.gyx, pair, n, rng);
  }
  if (trainer.config().algorithm == Algorithm::JdBw && !trainer.log().empty())
    r.midpoint_error = midpoint_match_error(trainer.log(), pair);
  return r;
}

}  // namespace bwlab
