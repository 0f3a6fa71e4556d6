#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bwlab/error.hpp"
#include "bwlab/training.hpp"

namespace bwlab {

/// Everything needed to reproduce one run.
struct ExperimentConfig {
  TrainConfig train;
  std::vector<double> source_masses;  // empty: preset default
  std::vector<double> target_masses;
  std::string out = "runs/default";
  std::size_t checkpoint_every = 0;  // 0: only initial and final checkpoints
  std::size_t eval_every = 0;        // 0: only the final evaluation
  std::size_t n_eval = 10000;

  DomainPair domain_pair() const {
    auto pair = make_preset(train.preset);
    if (source_masses.empty() && target_masses.empty()) return pair;
    return with_masses(pair, source_masses.empty() ? pair.source.masses() : source_masses,
                       target_masses.empty() ? pair.target.masses() : target_masses);
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("not a valid number: '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + RunLog::format(v[i]);
  return out;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_number<double>(trim(cell)));
  return out;
}

/// Comma-separated numbers, or nullopt when any cell is not a number.
inline std::optional<std::vector<double>> parse_list_or_header(const std::string& s) {
  try {
    return parse_list(s);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

struct ConfigKey {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class T, class Access>
ConfigKey numeric(std::string key, Access access) {
  return {std::move(key),
          [access](const ExperimentConfig& c) {
            const T v = access(const_cast<ExperimentConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) return RunLog::format(v);
            else return std::to_string(v);
          },
          [access](ExperimentConfig& c, const std::string& s) { access(c) = parse_number<T>(s); }};
}

template <class Access>
ConfigKey boolean(std::string key, Access access) {
  return {std::move(key),
          [access](const ExperimentConfig& c) {
            return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          },
          [access](ExperimentConfig& c, const std::string& s) { access(c) = parse_bool(s); }};
}

inline const std::vector<ConfigKey>& config_keys() {
  using C = ExperimentConfig;
  static const std::vector<ConfigKey> keys = {
      {"train.preset", [](const C& c) { return c.train.preset; },
       [](C& c, const std::string& s) {
         make_preset(s);  // validates the name
         c.train.preset = s;
       }},
      {"train.algorithm", [](const C& c) { return std::string(to_string(c.train.algorithm)); },
       [](C& c, const std::string& s) { c.train.algorithm = parse_algorithm(s); }},
      numeric<std::size_t>("train.m", [](C& c) -> auto& { return c.train.m; }),
      numeric<std::size_t>("train.N", [](C& c) -> auto& { return c.train.N; }),
      numeric<std::size_t>("train.d_steps", [](C& c) -> auto& { return c.train.d_steps; }),
      numeric<double>("train.lr_G", [](C& c) -> auto& { return c.train.lr_G; }),
      numeric<double>("train.lr_D", [](C& c) -> auto& { return c.train.lr_D; }),
      numeric<double>("train.lr_W", [](C& c) -> auto& { return c.train.lr_W; }),
      numeric<std::uint64_t>("train.seed", [](C& c) -> auto& { return c.train.seed; }),
      numeric<std::size_t>("train.log_every", [](C& c) -> auto& { return c.train.log_every; }),
      boolean("train.freeze_generators", [](C& c) -> auto& { return c.train.freeze_generators; }),
      boolean("train.freeze_discriminator", [](C& c) -> auto& { return c.train.freeze_discriminator; }),
      {"weight.strategy", [](const C& c) { return std::string(to_string(c.train.weight.strategy)); },
       [](C& c, const std::string& s) { c.train.weight.strategy = parse_strategy(s); }},
      numeric<double>("weight.clip_ratio", [](C& c) -> auto& { return c.train.clip.initial_ratio_bound; }),
      numeric<double>("weight.relax_factor", [](C& c) -> auto& { return c.train.clip.relax_factor; }),
      numeric<std::size_t>("weight.relax_every", [](C& c) -> auto& { return c.train.clip.relax_every; }),
      numeric<std::size_t>("weight.width", [](C& c) -> auto& { return c.train.weight.width; }),
      numeric<std::size_t>("weight.n_layers", [](C& c) -> auto& { return c.train.weight.n_layers; }),
      numeric<double>("weight.logit_scale", [](C& c) -> auto& { return c.train.weight.logit_scale; }),
      boolean("weight.spectral", [](C& c) -> auto& { return c.train.weight.spectral; }),
      boolean("weight.frozen_zero", [](C& c) -> auto& { return c.train.weight_frozen_zero; }),
      numeric<std::size_t>("generator.noise_dim", [](C& c) -> auto& { return c.train.generator.noise_dim; }),
      numeric<std::size_t>("generator.hidden_width", [](C& c) -> auto& { return c.train.generator.hidden_width; }),
      numeric<std::size_t>("generator.n_residual_blocks",
                           [](C& c) -> auto& { return c.train.generator.n_residual_blocks; }),
      boolean("generator.spectral", [](C& c) -> auto& { return c.train.generator.spectral; }),
      numeric<std::size_t>("disc.branch_width", [](C& c) -> auto& { return c.train.joint_disc.branch_width; }),
      numeric<std::size_t>("disc.trunk_width", [](C& c) -> auto& { return c.train.joint_disc.trunk_width; }),
      numeric<std::size_t>("disc.n_layers", [](C& c) -> auto& { return c.train.joint_disc.n_layers; }),
      numeric<std::size_t>("marginal.width", [](C& c) -> auto& { return c.train.marginal_disc.width; }),
      numeric<std::size_t>("marginal.n_layers", [](C& c) -> auto& { return c.train.marginal_disc.n_layers; }),
      numeric<double>("cycle.lambda", [](C& c) -> auto& { return c.train.cycle_lambda; }),
      boolean("cycle.adversarial", [](C& c) -> auto& { return c.train.cycle_adversarial; }),
      {"preset.source_masses", [](const C& c) { return format_list(c.source_masses); },
       [](C& c, const std::string& s) { c.source_masses = parse_list(s); }},
      {"preset.target_masses", [](const C& c) { return format_list(c.target_masses); },
       [](C& c, const std::string& s) { c.target_masses = parse_list(s); }},
      {"run.out", [](const C& c) { return c.out; }, [](C& c, const std::string& s) { c.out = s; }},
      numeric<std::size_t>("run.checkpoint_every", [](C& c) -> auto& { return c.checkpoint_every; }),
      numeric<std::size_t>("run.eval_every", [](C& c) -> auto& { return c.eval_every; }),
      numeric<std::size_t>("run.n_eval", [](C& c) -> auto& { return c.n_eval; }),
  };
  return keys;
}

inline const ConfigKey* find_key(const std::string& key) {
  for (const auto& k : config_keys())
    if (k.key == key) return &k;
  return nullptr;
}

inline void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value, std::size_t line) {
  const auto* k = find_key(key);
  if (!k) throw ConfigError(line, key, "unknown key '" + key + "'");
  try {
    k->set(cfg, value);
  } catch (const std::exception& e) {
    throw ConfigError(line, key, "bad value for '" + key + "': " + e.what());
  }
}

}  // namespace detail

/// Checks the assembled config as a whole (ConfigError with line 0).
inline void validate(const ExperimentConfig& cfg) {
  try {
    cfg.train.validate();
    cfg.domain_pair();
    if (cfg.n_eval == 0) throw std::invalid_argument("run.n_eval must be positive");
  } catch (const std::exception& e) {
    throw ConfigError(0, "", e.what());
  }
}

/// Flat `key = value` lines; `#` starts a comment. Unknown or repeated keys
/// are errors reported with their line number.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto text = detail::trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "", "expected 'key = value'");
    const auto key = detail::trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError(line, "", "missing key before '='");
    if (!seen.insert(key).second) throw ConfigError(line, key, "duplicate key '" + key + "'");
    detail::set_key(cfg, key, detail::trim(text.substr(eq + 1)), line);
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(0, "", "cannot open config file " + path);
  return parse_config(is);
}

/// `key=value` from the command line.
inline void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(0, assignment, "override must look like key=value");
  detail::set_key(cfg, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)), 0);
}

/// Every key, in a fixed order.
inline std::string serialize(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : detail::config_keys()) out += k.key + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace bwlab
