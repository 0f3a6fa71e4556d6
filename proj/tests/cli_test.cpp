#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bwlab/cli.hpp"

using namespace bwlab;
using namespace bwlab::cli;
namespace fs = std::filesystem;

namespace {

const std::string kDir = BWLAB_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "bwlab_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

TrainArgs small_run(const fs::path& out, std::vector<std::string> extra = {}) {
  TrainArgs a;
  a.config = kDir + "/balanced.cfg";
  a.overrides = {"train.m=16", "train.d_steps=1", "run.n_eval=200", "generator.hidden_width=8",
                 "disc.branch_width=6", "disc.trunk_width=8", "weight.width=8"};
  a.overrides.insert(a.overrides.end(), extra.begin(), extra.end());
  a.out = out.string();
  return a;
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(BWLAB_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST(CliTrain, ZeroStepsWritesInitialArtifacts) {
  const auto dir = scratch("n0");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_train(small_run(dir, {"train.N=0"}), out, err), kOk) << err.str();
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / checkpoint_name(0)));
  EXPECT_TRUE(fs::exists(dir / RunFiles::kFinal));
  const auto log = slurp(dir / RunFiles::kLog);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 1);
  EXPECT_EQ(log.substr(0, 5), "step,");
  EXPECT_TRUE(fs::exists(dir.parent_path() / RunFiles::kSummary));
}

TEST(CliTrain, SameSeedGivesIdenticalLogs) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(small_run(a, {"train.N=5"}), out, err), kOk) << err.str();
  ASSERT_EQ(cmd_train(small_run(b, {"train.N=5"}), out, err), kOk) << err.str();
  EXPECT_EQ(slurp(a / RunFiles::kLog), slurp(b / RunFiles::kLog));
  EXPECT_EQ(slurp(a / RunFiles::kReport), slurp(b / RunFiles::kReport));
}

TEST(CliTrain, RefusesExistingDirectory) {
  const auto dir = scratch("exists");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(small_run(dir, {"train.N=0"}), out, err), kOk);
  EXPECT_EQ(cmd_train(small_run(dir, {"train.N=0"}), out, err), kUsage);
  auto args = small_run(dir, {"train.N=0"});
  args.force = true;
  EXPECT_EQ(cmd_train(args, out, err), kOk);
}

TEST(CliTrain, ConfigErrorsExitTwo) {
  const auto dir = scratch("bad");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_train(small_run(dir, {"train.bogus=1"}), out, err), kUsage);
  EXPECT_NE(err.str().find("train.bogus"), std::string::npos);
  const auto cfg = scratch("bad.cfg");
  std::ofstream(cfg) << "train.m = 4\ntrain.m = 5\n";
  TrainArgs a;
  a.config = cfg.string();
  std::ostringstream err2;
  EXPECT_EQ(cmd_train(a, out, err2), kUsage);
  EXPECT_NE(err2.str().find("line 2"), std::string::npos);
}

TEST(CliTrain, SeedSweepSubdirectories) {
  const auto dir = scratch("sweep");
  auto args = small_run(dir, {"train.N=1"});
  args.seeds = parse_seed_range("3..4");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(args, out, err), kOk) << err.str();
  EXPECT_TRUE(fs::exists(dir / "seed_3" / RunFiles::kLog));
  EXPECT_TRUE(fs::exists(dir / "seed_4" / RunFiles::kLog));
  EXPECT_NE(slurp(dir / "seed_3" / RunFiles::kLog), slurp(dir / "seed_4" / RunFiles::kLog));
  const auto summary = slurp(dir / RunFiles::kSummary);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 3);
  EXPECT_THROW(parse_seed_range("5..2"), ConfigError);
}

TEST(CliEval, ReproducesTrainingReport) {
  const auto dir = scratch("eval");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(small_run(dir, {"train.N=4"}), out, err), kOk);
  EvalArgs e{(dir / RunFiles::kFinal).string(), (dir / RunFiles::kConfig).string(), std::nullopt, std::nullopt};
  std::ostringstream r1, r2;
  ASSERT_EQ(cmd_eval(e, r1, err), kOk) << err.str();
  ASSERT_EQ(cmd_eval(e, r2, err), kOk);
  EXPECT_EQ(r1.str(), r2.str());
  EXPECT_EQ(nlohmann::json::parse(r1.str()), nlohmann::json::parse(slurp(dir / RunFiles::kReport)));

  EvalArgs initial{(dir / "checkpoints" / checkpoint_name(0)).string(), (dir / RunFiles::kConfig).string(),
                   std::nullopt, std::nullopt};
  std::ostringstream r0;
  ASSERT_EQ(cmd_eval(initial, r0, err), kOk);
  EXPECT_EQ(nlohmann::json::parse(r0.str())["step"], 0);
}

TEST(CliEval, ShapeMismatchNamesTensor) {
  const auto dir = scratch("eval_shape");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(small_run(dir, {"train.N=0"}), out, err), kOk);
  const auto cfg = scratch("wide.cfg");
  std::string text = slurp(dir / RunFiles::kConfig);
  const auto pos = text.find("generator.hidden_width = 8");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 26, "generator.hidden_width = 9");
  std::ofstream(cfg) << text;
  EvalArgs e{(dir / RunFiles::kFinal).string(), cfg.string(), std::nullopt, std::nullopt};
  std::ostringstream err2;
  EXPECT_EQ(cmd_eval(e, out, err2), kUsage);
  EXPECT_NE(err2.str().find("gxy.in.w"), std::string::npos) << err2.str();
}

TEST(CliOracle, HandExampleAndBalanced) {
  const auto table = scratch("pq.csv");
  std::ofstream(table) << "p,q\n0.5,0.2\n0.5,0.8\n";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_oracle(table.string(), std::nullopt, out, err), kOk) << err.str();
  std::istringstream is(out.str());
  std::string name;
  double a = 0, b = 0;
  is >> name >> a >> b;
  EXPECT_EQ(name, "w");
  EXPECT_NEAR(a, 0.4, 1e-15);
  EXPECT_NEAR(b, 1.6, 1e-15);
  is >> name >> a >> b >> name >> a >> b;
  EXPECT_EQ(name, "midpoint");
  EXPECT_NEAR(a, 0.35, 1e-15);
  EXPECT_NEAR(b, 0.65, 1e-15);
  double residual = 1;
  is >> name >> residual;
  EXPECT_LT(residual, 1e-12);

  std::ostringstream bal;
  ASSERT_EQ(cmd_oracle("balanced", std::nullopt, bal, err), kOk);
  EXPECT_EQ(bal.str().substr(0, 22), "w 1 1 1 1 1 1 1 1 1 1\n");
  EXPECT_NE(bal.str().find("residual 0\n"), std::string::npos);
}

TEST(CliOracle, ZeroEntryExitsTwo) {
  const auto table = scratch("zero.csv");
  std::ofstream(table) << "0.5,0\n0.5,1\n";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_oracle(table.string(), std::nullopt, out, err), kUsage);
  EXPECT_NE(err.str().find("support assumption violated"), std::string::npos);
}

TEST(CliExport, WeightRowCount) {
  const auto dir = scratch("export");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(small_run(dir, {"train.N=2"}), out, err), kOk);
  std::ostringstream csv;
  ASSERT_EQ(cmd_export(dir.string(), "weights", std::nullopt, csv, err), kOk);
  const auto text = csv.str();
  // header + steps x (wx, wy, fx, fy) x K modes
  const std::size_t k = 10;
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1 + 2 * 4 * k);
  std::ostringstream losses;
  ASSERT_EQ(cmd_export(dir.string(), "losses", std::nullopt, losses, err), kOk);
  const auto loss_text = losses.str();
  EXPECT_EQ(std::count(loss_text.begin(), loss_text.end(), '\n'), 1 + 2 * 4);
  std::ostringstream sweep;
  ASSERT_EQ(cmd_export(dir.string(), "sweep", std::nullopt, sweep, err), kOk);
  EXPECT_EQ(sweep.str(), slurp(dir / RunFiles::kSweep));
}

TEST(CliExport, MissingRunExitsTwo) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_export("/nonexistent/run", "weights", std::nullopt, out, err), kUsage);
  EXPECT_EQ(cmd_export(".", "bogus", std::nullopt, out, err), kUsage);
}

TEST(CliBinary, ExitCodes) {
  const auto dir = scratch("bin");
  EXPECT_EQ(run_binary("train --config " + kDir + "/balanced.cfg --set train.N=0 --set train.m=8 --out " +
                       dir.string()),
            0);
  EXPECT_EQ(run_binary("train --config " + kDir + "/balanced.cfg --set nope=1 --out " + dir.string() + "_x"), 2);
  EXPECT_EQ(run_binary("oracle srmnist2d"), 0);
  EXPECT_EQ(run_binary("export /nonexistent weights"), 2);
  EXPECT_EQ(run_binary("frobnicate"), 2);
}
