#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bwlab/autodiff/adam.hpp"
#include "bwlab/autodiff/checkpoint.hpp"
#include "bwlab/domains.hpp"
#include "bwlab/nets.hpp"
#include "bwlab/random.hpp"
#include "bwlab/weighting.hpp"

namespace bwlab {

enum class Algorithm { OneSided, JdBw, WganBaseline, CycleBaseline };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::OneSided: return "one_sided";
    case Algorithm::JdBw: return "jd_bw";
    case Algorithm::WganBaseline: return "wgan_baseline";
    case Algorithm::CycleBaseline: return "cycle_baseline";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (auto a : {Algorithm::OneSided, Algorithm::JdBw, Algorithm::WganBaseline, Algorithm::CycleBaseline})
    if (s == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + s + "'");
}

struct TrainConfig {
  std::string preset = "srmnist2d";
  std::size_t m = 128;
  std::size_t N = 20000;
  std::size_t d_steps = 5;
  double lr_G = 1e-4;
  double lr_D = 2e-4;
  double lr_W = 5e-4;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::JdBw;
  WeightNetConfig weight;
  ClipSchedule clip;
  bool weight_frozen_zero = false;  // weight nets zeroed and never updated
  bool freeze_generators = false;
  bool freeze_discriminator = false;
  std::size_t log_every = 1;
  GeneratorConfig generator;
  JointDiscConfig joint_disc;
  MarginalDiscConfig marginal_disc;
  double cycle_lambda = 10.0;
  bool cycle_adversarial = true;

  void validate() const {
    if (m < 2) throw std::invalid_argument("batch size m must be at least 2");
    if (d_steps < 1) throw std::invalid_argument("d_steps must be at least 1");
    if (log_every < 1) throw std::invalid_argument("log_every must be positive");
    for (double lr : {lr_G, lr_D, lr_W})
      if (!(lr > 0.0)) throw std::invalid_argument("learning rates must be positive");
    if (!(cycle_lambda >= 0.0)) throw std::invalid_argument("cycle lambda must be non-negative");
    clip.validate();
    if (algorithm == Algorithm::OneSided && weight.strategy != WeightStrategy::OneSided)
      throw std::invalid_argument("one_sided training needs weight strategy one_sided");
  }
};

// ---------------------------------------------------------------------------

/// Per-logged-step records with a fixed column layout. Rows are written
/// through `sink` as they are appended when one is attached.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  void attach(std::ostream* sink, bool write_header = true) {
    sink_ = sink;
    if (sink_ && write_header) {
      write_header_to(*sink_);
      sink_->flush();
    }
  }

  void append(std::vector<double> row) {
    if (row.size() != columns_.size()) throw ShapeError("row", "run log row has the wrong number of columns");
    if (sink_) {
      write_row(*sink_, row);
      sink_->flush();
    }
    rows_.push_back(std::move(row));
  }

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    throw std::out_of_range("run log has no column '" + name + "'");
  }

  std::vector<double> column(const std::string& name) const {
    const auto c = column_index(name);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[c]);
    return out;
  }

  static std::string format(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

  void write_csv(std::ostream& os) const {
    write_header_to(os);
    for (const auto& r : rows_) write_row(os, r);
  }

  void write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_csv(os);
  }

  static RunLog read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("run log is empty");
    RunLog log(split(line));
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto cells = split(line);
      std::vector<double> row;
      for (const auto& c : cells) row.push_back(parse_double(c));
      log.append(std::move(row));
    }
    return log;
  }

  static RunLog read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_csv(is);
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  }

  static double parse_double(const std::string& s) {
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
    return v;
  }

  void write_header_to(std::ostream& os) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
  }

  static void write_row(std::ostream& os, const std::vector<double>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format(r[i]);
    os << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
  std::ostream* sink_ = nullptr;
};

inline std::vector<std::string> run_log_columns(const DomainPair& pair) {
  std::vector<std::string> cols = {"step", "l_minus", "l_plus", "gap"};
  for (const char* prefix : {"wx", "wy", "fx", "fy"}) {
    const auto& dom = prefix[1] == 'x' ? pair.source : pair.target;
    for (int label : dom.labels()) cols.push_back(std::string(prefix) + "_mode_" + std::to_string(label));
  }
  cols.push_back("clip_bound");
  return cols;
}

// ---------------------------------------------------------------------------

/// Networks, optimizer moments, step counter and data/noise streams.
struct TrainState {
  std::optional<Generator> gxy;
  std::optional<Generator> gyx;
  std::optional<JointDiscriminator> joint;
  std::optional<MarginalDiscriminator> disc_x;
  std::optional<MarginalDiscriminator> disc_y;
  std::optional<WeightNetworks> weights;
  std::map<std::string, ad::AdamState> adam;  // keyed by network name
  std::size_t step = 0;
  RandomStream data_x, data_y, noise;

  std::vector<Network*> networks() {
    std::vector<Network*> out;
    for (Network* n : std::initializer_list<Network*>{gxy ? &*gxy : nullptr, gyx ? &*gyx : nullptr,
                                                       joint ? &*joint : nullptr, disc_x ? &*disc_x : nullptr,
                                                       disc_y ? &*disc_y : nullptr})
      if (n) out.push_back(n);
    if (weights)
      for (auto* n : weights->networks()) out.push_back(n);
    return out;
  }
};

struct TrainResult;

/// Drives one training run. Construction initializes all networks from the
/// run seed; run_until() advances to a given step, so a restored trainer
/// continues the exact trajectory of an uninterrupted one.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg) : Trainer(cfg, make_preset(cfg.preset)) {}

  Trainer(TrainConfig cfg, DomainPair pair) : cfg_(std::move(cfg)), pair_(std::move(pair)) {
    cfg_.validate();
    pair_.validate();
    cfg_.generator.data_dim = cfg_.joint_disc.data_dim = cfg_.marginal_disc.data_dim = cfg_.weight.data_dim =
        pair_.source.dim();
    if (cfg_.algorithm == Algorithm::OneSided) cfg_.weight.strategy = WeightStrategy::OneSided;

    RandomStream init(cfg_.seed, "init");
    state_.data_x = RandomStream(cfg_.seed, "data-x");
    state_.data_y = RandomStream(cfg_.seed, "data-y");
    state_.noise = RandomStream(cfg_.seed, "noise");
    state_.gxy.emplace("gxy", cfg_.generator, init);
    if (cfg_.algorithm != Algorithm::OneSided) state_.gyx.emplace("gyx", cfg_.generator, init);
    switch (cfg_.algorithm) {
      case Algorithm::JdBw:
      case Algorithm::WganBaseline: state_.joint.emplace("d", cfg_.joint_disc, init); break;
      case Algorithm::OneSided: state_.disc_y.emplace("dy", cfg_.marginal_disc, init); break;
      case Algorithm::CycleBaseline:
        state_.disc_x.emplace("dx", cfg_.marginal_disc, init);
        state_.disc_y.emplace("dy", cfg_.marginal_disc, init);
        break;
    }
    // Weight nets come last so they never perturb the other initializations.
    if (weighted()) {
      state_.weights.emplace(cfg_.weight, init);
      if (cfg_.weight_frozen_zero)
        for (auto* n : state_.weights->networks()) n->zero_parameters();
    }
    for (auto* n : state_.networks()) state_.adam[n->name()] = ad::AdamState(n->params().total_size(), {lr_for(*n)});
    log_ = RunLog(run_log_columns(pair_));
  }

  const TrainConfig& config() const noexcept { return cfg_; }
  const DomainPair& pair() const noexcept { return pair_; }
  TrainState& state() noexcept { return state_; }
  const TrainState& state() const noexcept { return state_; }
  RunLog& log() noexcept { return log_; }
  const RunLog& log() const noexcept { return log_; }

  bool weighted() const noexcept {
    return cfg_.algorithm == Algorithm::JdBw || cfg_.algorithm == Algorithm::OneSided;
  }

  /// Called after every completed step (e.g. periodic checkpoints).
  std::function<void(Trainer&)> on_step;

  void run_until(std::size_t n) {
    while (state_.step < n) {
      step();
      if (on_step) on_step(*this);
    }
  }

  void run() { run_until(cfg_.N); }

  void step() {
    const auto s = state_.step;
    for (auto* n : state_.networks()) n->refresh_spectral(1);
    switch (cfg_.algorithm) {
      case Algorithm::JdBw:
      case Algorithm::WganBaseline: joint_step(s); break;
      case Algorithm::OneSided: one_sided_step(s); break;
      case Algorithm::CycleBaseline: cycle_step(s); break;
    }
    ++state_.step;
  }

  ad::Checkpoint checkpoint() {
    ad::Checkpoint ckpt;
    ckpt.step_count = state_.step;
    ckpt.rng = {{"data-x", state_.data_x.state()}, {"data-y", state_.data_y.state()}, {"noise", state_.noise.state()}};
    ckpt.meta["algorithm"] = to_string(cfg_.algorithm);
    ckpt.meta["preset"] = pair_.name;
    for (auto* n : state_.networks()) {
      n->save(ckpt);
      const auto& a = state_.adam.at(n->name());
      ckpt.add("adam." + n->name() + ".m", Tensor::vector(a.first_moment()));
      ckpt.add("adam." + n->name() + ".v", Tensor::vector(a.second_moment()));
      ckpt.meta["adam_steps"][n->name()] = a.step_count();
    }
    return ckpt;
  }

  void restore(const ad::Checkpoint& ckpt) {
    for (auto* n : state_.networks()) {
      n->load(ckpt);
      auto& a = state_.adam.at(n->name());
      const auto& m = ckpt.at("adam." + n->name() + ".m");
      const auto& v = ckpt.at("adam." + n->name() + ".v");
      a.restore(m.storage(), v.storage(), ckpt.meta.at("adam_steps").at(n->name()).get<std::uint64_t>());
    }
    state_.step = ckpt.step_count;
    state_.data_x.restore(ckpt.rng.at("data-x"));
    state_.data_y.restore(ckpt.rng.at("data-y"));
    state_.noise.restore(ckpt.rng.at("noise"));
  }

 private:
  double lr_for(const Network& n) const {
    const auto& name = n.name();
    if (name == "gxy" || name == "gyx") return cfg_.lr_G;
    if (name == "w" || name == "wx" || name == "wy") return cfg_.lr_W;
    return cfg_.lr_D;
  }

  struct Batch {
    LabeledBatch x, y;
    Tensor zx, zy;
  };

  Batch sample() {
    Batch b;
    b.x = sample_batch(pair_.source, cfg_.m, state_.data_x);
    b.y = sample_batch(pair_.target, cfg_.m, state_.data_y);
    b.zx = sample_noise(cfg_.m, cfg_.generator.noise_dim, state_.noise);
    b.zy = sample_noise(cfg_.m, cfg_.generator.noise_dim, state_.noise);
    return b;
  }

  void update(Network& n) {
    state_.adam.at(n.name()).step(n.params());
  }

  void check_finite(double v, const char* name, std::size_t step) const {
    if (!std::isfinite(v))
      throw NumericalError(name, std::string("loss ") + name + " is not finite at step " + std::to_string(step), step);
  }

  void zero_all_grads() {
    for (auto* n : state_.networks()) n->params().zero_grad();
  }

  /// Joint-discriminator losses for one batch: L- over (x, Gxy x) and L+
  /// over (Gyx y, y), weighted by midpoint factors when `weighted()`.
  struct JointForward {
    Var l_minus, l_plus, wx, wy, fx, fy;
  };

  JointForward joint_forward(Tape& tape, const Batch& b, double bound, bool train_g, bool train_w, bool train_d) {
    Var x = tape.constant(b.x.points), y = tape.constant(b.y.points);
    Var gx = state_.gxy->forward(tape, x, tape.constant(b.zx), train_g);
    Var gy = state_.gyx->forward(tape, y, tape.constant(b.zy), train_g);
    Var dx = state_.joint->forward(tape, x, gx, train_d);
    Var dy = state_.joint->forward(tape, gy, y, train_d);
    JointForward f;
    if (weighted()) {
      auto w = compose(*state_.weights, x, y, gx, gy, train_w);
      f.wx = clip(w.wx, bound, Normalization::MeanOne);
      f.wy = clip(w.wy, bound, Normalization::MeanOne);
      f.fx = midpoint_factors(f.wx);
      f.fy = midpoint_factors(f.wy);
      f.l_minus = ad::sum(dx * f.fx);
      f.l_plus = ad::sum(dy * f.fy);
    } else {
      f.l_minus = ad::sum(dx);
      f.l_plus = ad::sum(dy);
    }
    return f;
  }

  void joint_step(std::size_t s) {
    const double bound = cfg_.clip.bound_at(s);
    const bool train_g = !cfg_.freeze_generators;
    const bool train_w = weighted() && !cfg_.weight_frozen_zero;

    const auto batch = sample();
    double lm = 0.0, lp = 0.0;
    std::vector<double> wx, wy;
    {
      Tape tape;
      auto f = joint_forward(tape, batch, bound, train_g, train_w, false);
      Var gap = f.l_minus - f.l_plus;
      lm = f.l_minus.value().item();
      lp = f.l_plus.value().item();
      check_finite(lm, "L-", s);
      check_finite(lp, "L+", s);
      if (weighted()) {
        wx = f.wx.value().storage();
        wy = f.wy.value().storage();
      }
      // One pass gives grad(L- - L+); the weight nets descend its square,
      // whose gradient is 2 (L- - L+) grad(L- - L+).
      zero_all_grads();
      tape.backward(gap, Tensor::scalar(1.0));
      if (train_g) {
        update(*state_.gxy);
        update(*state_.gyx);
      }
      if (train_w) {
        const double g = 2.0 * (lm - lp);
        for (auto* n : state_.weights->networks()) {
          for (auto& p : n->params())
            for (auto& v : p.grad.storage()) v *= g;
          update(*n);
        }
      }
    }
    if (!cfg_.freeze_discriminator) {
      for (std::size_t j = 0; j < cfg_.d_steps; ++j) {
        const auto b = sample();
        Tape tape;
        auto f = joint_forward(tape, b, bound, false, false, true);
        Var gap = f.l_minus - f.l_plus;
        check_finite(gap.value().item(), "D gap", s);
        zero_all_grads();
        tape.backward(gap, Tensor::scalar(-1.0));  // ascent on L- - L+
        update(*state_.joint);
      }
    }
    if (s % cfg_.log_every == 0) {
      if (!weighted()) {
        wx.assign(cfg_.m, 1.0);
        wy.assign(cfg_.m, 1.0);
      }
      log_row(s, lm, lp, batch, wx, wy, bound);
    }
  }

  void one_sided_step(std::size_t s) {
    const double bound = cfg_.clip.bound_at(s);
    const bool train_g = !cfg_.freeze_generators;
    const bool train_w = !cfg_.weight_frozen_zero;
    auto& g = *state_.gxy;
    auto& d = *state_.disc_y;
    auto& w = state_.weights->primary();
    const double inv_m = 1.0 / static_cast<double>(cfg_.m);

    const auto forward = [&](Tape& tape, const Batch& b, bool tg, bool tw, bool td) {
      Var x = tape.constant(b.x.points);
      Var gx = g.forward(tape, x, tape.constant(b.zx), tg);
      Var wts = clip(batch_softmax(w.logits(tape, x, tw), Normalization::SumOne), bound, Normalization::SumOne);
      Var l_minus = ad::sum(d.forward(tape, gx, td) * wts);
      Var l_plus = ad::scale(ad::sum(d.forward(tape, tape.constant(b.y.points), td)), inv_m);
      return std::tuple{l_minus, l_plus, wts};
    };

    const auto batch = sample();
    double lm = 0.0, lp = 0.0;
    std::vector<double> wx;
    {
      Tape tape;
      auto [l_minus, l_plus, wts] = forward(tape, batch, train_g, train_w, false);
      lm = l_minus.value().item();
      lp = l_plus.value().item();
      check_finite(lm, "L-", s);
      check_finite(lp, "L+", s);
      wx = wts.value().storage();
      // L+ does not depend on G or W, so grad L- serves both updates.
      zero_all_grads();
      tape.backward(l_minus, Tensor::scalar(1.0));
      if (train_g) update(g);
      if (train_w) {
        const double k = 2.0 * (lm - lp);
        for (auto& p : w.params())
          for (auto& v : p.grad.storage()) v *= k;
        update(w);
      }
    }
    if (!cfg_.freeze_discriminator) {
      for (std::size_t j = 0; j < cfg_.d_steps; ++j) {
        const auto b = sample();
        Tape tape;
        auto [l_minus, l_plus, wts] = forward(tape, b, false, false, true);
        Var gap = l_minus - l_plus;
        check_finite(gap.value().item(), "D gap", s);
        zero_all_grads();
        tape.backward(gap, Tensor::scalar(-1.0));
        update(d);
      }
    }
    if (s % cfg_.log_every == 0) {
      for (auto& v : wx) v *= static_cast<double>(cfg_.m);  // logged on the mean-one scale
      log_row(s, lm, lp, batch, wx, std::vector<double>(cfg_.m, 1.0), bound);
    }
  }

  void cycle_step(std::size_t s) {
    const bool train_g = !cfg_.freeze_generators;
    const bool adversarial = cfg_.cycle_adversarial;
    auto& gxy = *state_.gxy;
    auto& gyx = *state_.gyx;
    const double inv_m = 1.0 / static_cast<double>(cfg_.m);

    struct Losses {
      Var l_minus, l_plus;
    };
    const auto adversarial_losses = [&](Tape& tape, const Batch& b, bool tg, bool td, Var& gx, Var& gy) {
      Var x = tape.constant(b.x.points), y = tape.constant(b.y.points);
      gx = gxy.forward(tape, x, tape.constant(b.zx), tg);
      gy = gyx.forward(tape, y, tape.constant(b.zy), tg);
      Var fake = ad::sum(state_.disc_y->forward(tape, gx, td)) + ad::sum(state_.disc_x->forward(tape, gy, td));
      Var real = ad::sum(state_.disc_y->forward(tape, y, td)) + ad::sum(state_.disc_x->forward(tape, x, td));
      return Losses{ad::scale(fake, inv_m), ad::scale(real, inv_m)};
    };

    const auto batch = sample();
    double lm = 0.0, lp = 0.0;
    {
      Tape tape;
      Var gx, gy;
      auto l = adversarial_losses(tape, batch, train_g, false, gx, gy);
      lm = l.l_minus.value().item();
      lp = l.l_plus.value().item();
      check_finite(lm, "L-", s);
      check_finite(lp, "L+", s);
      const auto z1 = sample_noise(cfg_.m, cfg_.generator.noise_dim, state_.noise);
      const auto z2 = sample_noise(cfg_.m, cfg_.generator.noise_dim, state_.noise);
      Var rx = gyx.forward(tape, gx, tape.constant(z1), train_g) - tape.constant(batch.x.points);
      Var ry = gxy.forward(tape, gy, tape.constant(z2), train_g) - tape.constant(batch.y.points);
      Var cyc = ad::scale(ad::sum(ad::abs(rx)) + ad::sum(ad::abs(ry)), inv_m);
      check_finite(cyc.value().item(), "L-cyc", s);
      Var loss = ad::scale(cyc, cfg_.cycle_lambda);
      if (adversarial) loss = l.l_minus + loss;
      zero_all_grads();
      tape.backward(loss, Tensor::scalar(1.0));
      if (train_g) {
        update(gxy);
        update(gyx);
      }
    }
    if (adversarial && !cfg_.freeze_discriminator) {
      for (std::size_t j = 0; j < cfg_.d_steps; ++j) {
        const auto b = sample();
        Tape tape;
        Var gx, gy;
        auto l = adversarial_losses(tape, b, false, true, gx, gy);
        Var gap = l.l_minus - l.l_plus;
        check_finite(gap.value().item(), "D gap", s);
        zero_all_grads();
        tape.backward(gap, Tensor::scalar(-1.0));
        update(*state_.disc_x);
        update(*state_.disc_y);
      }
    }
    if (s % cfg_.log_every == 0) {
      const std::vector<double> ones(cfg_.m, 1.0);
      log_row(s, lm, lp, batch, ones, ones, cfg_.clip.bound_at(s));
    }
  }

  static std::vector<double> per_mode_means(const MixtureDomain& dom, const std::vector<int>& labels,
                                            const std::vector<double>& w, bool midpoint) {
    std::vector<double> out;
    for (int label : dom.labels()) {
      double s = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != label) continue;
        s += midpoint ? 0.5 * (1.0 + w[i]) : w[i];
        ++n;
      }
      out.push_back(n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
  }

  void log_row(std::size_t s, double lm, double lp, const Batch& b, const std::vector<double>& wx,
               const std::vector<double>& wy, double bound) {
    std::vector<double> row = {static_cast<double>(s), lm, lp, lm - lp};
    for (auto&& part : {per_mode_means(pair_.source, b.x.labels, wx, false),
                        per_mode_means(pair_.target, b.y.labels, wy, false),
                        per_mode_means(pair_.source, b.x.labels, wx, true),
                        per_mode_means(pair_.target, b.y.labels, wy, true)})
      row.insert(row.end(), part.begin(), part.end());
    row.push_back(bound);
    log_.append(std::move(row));
  }

  TrainConfig cfg_;
  DomainPair pair_;
  TrainState state_;
  RunLog log_;
};

// ---------------------------------------------------------------------------

struct TrainResult {
  std::unique_ptr<Trainer> trainer;
  TrainState& state() { return trainer->state(); }
  RunLog& log() { return trainer->log(); }
};

inline TrainResult train(const TrainConfig& cfg) {
  TrainResult r{std::make_unique<Trainer>(cfg)};
  r.trainer->run();
  return r;
}

inline TrainResult train_as(TrainConfig cfg, Algorithm expected) {
  if (cfg.algorithm != expected)
    throw std::invalid_argument(std::string("config algorithm is ") + to_string(cfg.algorithm) + ", expected " +
                                to_string(expected));
  return train(cfg);
}

inline TrainResult train_one_sided(const TrainConfig& cfg) { return train_as(cfg, Algorithm::OneSided); }
inline TrainResult train_jd_bw(const TrainConfig& cfg) { return train_as(cfg, Algorithm::JdBw); }
inline TrainResult train_wgan_baseline(const TrainConfig& cfg) { return train_as(cfg, Algorithm::WganBaseline); }
inline TrainResult train_cycle_baseline(const TrainConfig& cfg) { return train_as(cfg, Algorithm::CycleBaseline); }

}  // namespace bwlab
