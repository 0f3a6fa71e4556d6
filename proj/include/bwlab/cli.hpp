#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bwlab/autodiff/checkpoint.hpp"
#include "bwlab/config.hpp"
#include "bwlab/domains.hpp"
#include "bwlab/eval.hpp"
#include "bwlab/training.hpp"

namespace bwlab::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3 };

struct TrainArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool force = false;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> seeds;  // inclusive
};

struct RunFiles {
  static constexpr const char* kConfig = "config.cfg";
  static constexpr const char* kLog = "log.csv";
  static constexpr const char* kFinal = "final.ckpt";
  static constexpr const char* kReport = "eval.json";
  static constexpr const char* kTrajectories = "trajectories.csv";
  static constexpr const char* kSweep = "sweep.csv";
  static constexpr const char* kCheckpoints = "checkpoints";
  static constexpr const char* kSummary = "runs_summary.csv";
};

inline std::string checkpoint_name(std::size_t step) {
  std::ostringstream os;
  os << "step_" << std::setw(8) << std::setfill('0') << step << ".ckpt";
  return os.str();
}

/// "a..b" (inclusive).
inline std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw ConfigError(0, "--seeds", "seed range must look like a..b");
  const auto a = detail::parse_number<std::uint64_t>(s.substr(0, dots));
  const auto b = detail::parse_number<std::uint64_t>(s.substr(dots + 2));
  if (b < a) throw ConfigError(0, "--seeds", "seed range is empty");
  return {a, b};
}

inline void report_config_error(std::ostream& err, const ConfigError& e) {
  err << "config error";
  if (e.line() > 0) err << " at line " << e.line();
  if (!e.key().empty()) err << " (key '" << e.key() << "')";
  err << ": " << e.what() << '\n';
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

inline void write_run_artifacts(Trainer& trainer, const ExperimentConfig& cfg, const fs::path& dir) {
  ad::write_checkpoint(dir / RunFiles::kFinal, trainer.checkpoint());
  const auto report = evaluate(trainer, cfg.n_eval, cfg.train.seed);
  write_text(dir / RunFiles::kReport, report.to_json().dump(2) + "\n");
  if (!trainer.log().empty()) {
    std::ofstream os(dir / RunFiles::kTrajectories, std::ios::trunc);
    write_trajectories_csv(os, weight_trajectories(trainer.log()));
  }
  {
    RandomStream rng(cfg.train.seed, "sweep");
    std::ofstream os(dir / RunFiles::kSweep, std::ios::trunc);
    write_sweep_csv(os, fixed_noise_sweep(*trainer.state().gxy, trainer.pair().source, 8, 16, rng),
                    trainer.pair().target);
  }
  const auto summary = dir.parent_path() / RunFiles::kSummary;
  const bool fresh = !fs::exists(summary);
  std::ofstream os(summary, std::ios::app);
  if (fresh) os << EvalReport::summary_header() << '\n';
  os << report.summary_row(dir.filename().string(), trainer.pair()) << '\n';
}

/// One training run into `cfg.out`.
inline int train_one(const ExperimentConfig& cfg, bool force, std::ostream& out, std::ostream& err) {
  const fs::path dir = cfg.out;
  if (fs::exists(dir)) {
    if (!force) {
      err << "run directory " << dir << " already exists (use --force to overwrite)\n";
      return kUsage;
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir / RunFiles::kCheckpoints);
  write_text(dir / RunFiles::kConfig, serialize(cfg));

  Trainer trainer(cfg.train, cfg.domain_pair());
  std::ofstream log_stream(dir / RunFiles::kLog, std::ios::trunc);
  trainer.log().attach(&log_stream);
  ad::write_checkpoint(dir / RunFiles::kCheckpoints / checkpoint_name(0), trainer.checkpoint());
  trainer.on_step = [&](Trainer& t) {
    const auto s = t.state().step;
    if (cfg.checkpoint_every && s % cfg.checkpoint_every == 0)
      ad::write_checkpoint(dir / RunFiles::kCheckpoints / checkpoint_name(s), t.checkpoint());
    if (cfg.eval_every && s % cfg.eval_every == 0 && s < cfg.train.N) {
      const auto r = evaluate(t, cfg.n_eval, cfg.train.seed);
      write_text(dir / ("eval_step_" + std::to_string(s) + ".json"), r.to_json().dump(2) + "\n");
    }
  };
  try {
    trainer.run();
  } catch (const NumericalError& e) {
    err << "numerical failure at step " << (e.step() == NumericalError::kNoStep ? trainer.state().step : e.step())
        << " (" << e.name() << "): " << e.what() << '\n';
    return kNumerical;
  }
  write_run_artifacts(trainer, cfg, dir);
  out << "finished " << cfg.train.N << " steps into " << dir.string() << '\n';
  return kOk;
}

inline int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> seeds = args.seeds;
  try {
    cfg = load_config(args.config);
    for (const auto& o : args.overrides) apply_override(cfg, o);
    if (args.seed) cfg.train.seed = *args.seed;
    if (args.out) cfg.out = *args.out;
    validate(cfg);
  } catch (const ConfigError& e) {
    report_config_error(err, e);
    return kUsage;
  }
  try {
    if (!seeds) return train_one(cfg, args.force, out, err);
    int worst = kOk;
    for (auto s = seeds->first; s <= seeds->second; ++s) {
      auto c = cfg;
      c.train.seed = s;
      c.out = (fs::path(cfg.out) / ("seed_" + std::to_string(s))).string();
      worst = std::max(worst, train_one(c, args.force, out, err));
    }
    return worst;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::optional<std::string> out;  // report path; stdout when absent
  std::optional<std::string> log;  // run log for the midpoint error
};

inline int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(args.config);
  } catch (const ConfigError& e) {
    report_config_error(err, e);
    return kUsage;
  }
  try {
    Trainer trainer(cfg.train, cfg.domain_pair());
    const auto ckpt = ad::read_checkpoint(args.checkpoint);
    trainer.restore(ckpt);
    const fs::path log_path = args.log ? fs::path(*args.log) : fs::path(args.checkpoint).parent_path() / RunFiles::kLog;
    if (fs::exists(log_path)) {
      auto log = RunLog::read_csv(log_path.string());
      // keep only the rows the checkpoint had seen
      RunLog trimmed(log.columns());
      for (const auto& row : log.rows())
        if (row[0] < static_cast<double>(ckpt.step_count)) trimmed.append(row);
      trainer.log() = std::move(trimmed);
    }
    const auto report = evaluate(trainer, cfg.n_eval, cfg.train.seed).to_json().dump(2) + "\n";
    if (args.out) write_text(*args.out, report);
    else out << report;
    return kOk;
  } catch (const ShapeError& e) {
    err << "checkpoint does not match the configured networks: tensor '" << e.tensor() << "': " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

/// Two-column table: one category per line as `p,q` (a non-numeric first
/// line is taken as a header).
inline CategoricalPair read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open table " + path);
  CategoricalPair pair;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::parse_list_or_header(line);
    if (!cells) {
      if (!first) throw std::invalid_argument("bad table row: " + line);
      first = false;
      continue;
    }
    first = false;
    if (cells->size() != 2) throw std::invalid_argument("table rows need exactly two values: " + line);
    pair.p.push_back((*cells)[0]);
    pair.q.push_back((*cells)[1]);
  }
  return pair;
}

inline int cmd_oracle(const std::string& source, const std::optional<std::string>& csv, std::ostream& out,
                      std::ostream& err) {
  CategoricalPair pair;
  try {
    const auto& names = preset_names();
    pair = std::find(names.begin(), names.end(), source) != names.end() ? make_preset(source).categorical()
                                                                        : read_table(source);
    const auto w = rn_oracle(pair);
    const auto w_inv = rn_oracle(pair.swapped());
    const auto mid = midpoint_oracle(pair);
    const double residual = midpoint_residual(pair, w);
    const auto row = [&](const char* name, const std::vector<double>& v) {
      out << name;
      for (double x : v) out << ' ' << RunLog::format(x);
      out << '\n';
    };
    row("w", w);
    row("w_inv", w_inv);
    row("midpoint", mid);
    out << "residual " << RunLog::format(residual) << '\n';
    if (csv) {
      std::ofstream os(*csv, std::ios::trunc);
      os << "category,p,q,w,w_inv,midpoint\n";
      for (std::size_t k = 0; k < pair.size(); ++k)
        os << k << ',' << RunLog::format(pair.p[k]) << ',' << RunLog::format(pair.q[k]) << ',' << RunLog::format(w[k])
           << ',' << RunLog::format(w_inv[k]) << ',' << RunLog::format(mid[k]) << '\n';
      os << "residual,,,,," << RunLog::format(residual) << '\n';
    }
    return kOk;
  } catch (const SupportError& e) {
    err << "support assumption violated (the density ratio needs positive mass on both sides): " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

/// Long-format (step,series,value) export of a run's artifacts.
inline int cmd_export(const std::string& run_dir, const std::string& what, const std::optional<std::string>& dest,
                      std::ostream& out, std::ostream& err) {
  const fs::path dir = run_dir;
  try {
    std::ostringstream os;
    if (what == "weights" || what == "losses") {
      const auto log_path = dir / RunFiles::kLog;
      if (!fs::exists(log_path)) {
        err << "missing artifact: " << log_path.string() << '\n';
        return kUsage;
      }
      const auto log = RunLog::read_csv(log_path.string());
      if (what == "weights") {
        if (log.empty()) {
          os << "step,series,value\n";
        } else {
          write_trajectories_csv(os, weight_trajectories(log));
        }
      } else {
        os << "step,series,value\n";
        for (const auto& row : log.rows())
          for (const char* c : {"l_minus", "l_plus", "gap", "clip_bound"})
            os << RunLog::format(row[0]) << ',' << c << ',' << RunLog::format(row[log.column_index(c)]) << '\n';
      }
    } else if (what == "sweep") {
      const auto path = dir / RunFiles::kSweep;
      if (!fs::exists(path)) {
        err << "missing artifact: " << path.string() << '\n';
        return kUsage;
      }
      std::ifstream is(path);
      os << is.rdbuf();
    } else {
      err << "unknown export kind '" << what << "' (expected weights, losses or sweep)\n";
      return kUsage;
    }
    if (dest) write_text(*dest, os.str());
    else out << os.str();
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace bwlab::cli
