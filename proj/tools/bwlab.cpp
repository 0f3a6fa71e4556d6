#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bwlab/cli.hpp"

int main(int argc, char** argv) {
  using namespace bwlab::cli;
  CLI::App app{"bwlab: batch-weighted domain transfer on synthetic domains"};
  app.require_subcommand(1);

  TrainArgs train;
  std::string seeds, seed;
  auto* t = app.add_subcommand("train", "run a training configuration");
  t->add_option("--config", train.config, "experiment config file")->required();
  t->add_option("--set", train.overrides, "override key=value (repeatable)");
  t->add_option("--seed", seed, "run seed");
  t->add_option("--seeds", seeds, "seed sweep a..b, one subdirectory per seed");
  std::string out;
  t->add_option("--out", out, "run directory");
  t->add_flag("--force", train.force, "overwrite an existing run directory");

  EvalArgs eval;
  std::string eval_out, eval_log;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  e->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  e->add_option("--config", eval.config, "experiment config file")->required();
  e->add_option("--out", eval_out, "report path (default: stdout)");
  e->add_option("--log", eval_log, "run log (default: log.csv next to the checkpoint)");

  std::string oracle_source, oracle_csv;
  auto* o = app.add_subcommand("oracle", "print density-ratio and midpoint oracles");
  o->add_option("source", oracle_source, "preset name or p,q table file")->required();
  o->add_option("--csv", oracle_csv, "also write a CSV table");

  std::string run_dir, what, export_out;
  auto* x = app.add_subcommand("export", "export run artifacts as long-format CSV");
  x->add_option("run_dir", run_dir, "run directory")->required();
  x->add_option("what", what, "weights | losses | sweep")->required();
  x->add_option("--out", export_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsage;
  }

  const auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
  try {
    if (*t) {
      if (!seed.empty()) train.seed = bwlab::detail::parse_number<std::uint64_t>(seed);
      if (!seeds.empty()) train.seeds = parse_seed_range(seeds);
      train.out = opt(out);
      return cmd_train(train, std::cout, std::cerr);
    }
    if (*e) {
      eval.out = opt(eval_out);
      eval.log = opt(eval_log);
      return cmd_eval(eval, std::cout, std::cerr);
    }
    if (*o) return cmd_oracle(oracle_source, opt(oracle_csv), std::cout, std::cerr);
    if (*x) return cmd_export(run_dir, what, opt(export_out), std::cout, std::cerr);
  } catch (const bwlab::ConfigError& err) {
    report_config_error(std::cerr, err);
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
