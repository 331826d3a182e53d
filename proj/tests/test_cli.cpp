#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "mdp_tcm/cli.hpp"
#include "mdp_tcm/csv_io.hpp"
#include "mdp_tcm/metrics.hpp"
#include "mdp_tcm/model_io.hpp"
#include "mdp_tcm/multistate.hpp"

using namespace mdp_tcm;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mdp-tcm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mdp_tcm_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::vector<std::string> kFast = {"--preset",          "desk", "--pretrain-epochs", "2",
                                        "--finetune-epochs", "3",    "--de-generations",  "2",
                                        "--de-population",   "6",    "--hidden-sizes",    "6"};

std::vector<std::string> with_fast(std::vector<std::string> args) {
  args.insert(args.end(), kFast.begin(), kFast.end());
  return args;
}

fs::path generated(const std::string& name) {
  const fs::path dir = scratch(name);
  EXPECT_EQ(run_cli({"generate", "--runs", "3", "--seed", "7", "--run-seconds", "12", "--out", (dir / "data").string()}),
            0);
  return dir;
}

}  // namespace

TEST(Config, ThreeLayerPrecedence) {
  const auto preset_only = cli::resolve_config({}, {});
  EXPECT_EQ(cli::train_config(preset_only, "regressor").finetune_epochs, 500);
  EXPECT_EQ(cli::train_config(preset_only, "classifier").finetune_epochs, 1000);

  const auto from_file = cli::resolve_config({{"finetune_epochs", "40"}, {"batch_size", "16"}}, {});
  EXPECT_EQ(cli::train_config(from_file, "regressor").finetune_epochs, 40);
  EXPECT_EQ(cli::train_config(from_file, "regressor").batch_size, 16);

  const auto flagged = cli::resolve_config({{"finetune_epochs", "40"}, {"batch_size", "16"}}, {{"finetune_epochs", "7"}});
  const TrainConfig t = cli::train_config(flagged, "regressor");
  EXPECT_EQ(t.finetune_epochs, 7);
  EXPECT_EQ(t.batch_size, 16);
  EXPECT_EQ(t.pretrain_epochs, 200);
  EXPECT_TRUE(flagged.from_flags.count("finetune_epochs"));
  EXPECT_TRUE(flagged.from_file.count("batch_size"));

  const auto builtin = cli::resolve_config({{"smoothing_window", "9"}}, {{"smoothing_window", "3"}});
  EXPECT_EQ(cli::mdp_config(builtin).smoothing_window, 3u);
  EXPECT_EQ(cli::mdp_config(cli::resolve_config({{"smoothing_window", "9"}}, {})).smoothing_window, 9u);
  EXPECT_EQ(cli::mdp_config(preset_only).smoothing_window, 50u);
}

TEST(Config, Rejections) {
  EXPECT_THROW(cli::resolve_config({{"bogus", "1"}}, {}), cli::UsageError);
  EXPECT_THROW(cli::resolve_config({}, {{"bogus", "1"}}), cli::UsageError);
  EXPECT_THROW(cli::train_config(cli::resolve_config({}, {{"preset", "nope"}}), "regressor"), cli::UsageError);
  EXPECT_THROW(cli::train_config(cli::resolve_config({}, {{"batch_size", "x"}}), "regressor"), cli::UsageError);
  EXPECT_THROW(cli::mdp_config(cli::resolve_config({}, {{"smoothing_window", "0"}})), cli::UsageError);
  EXPECT_THROW(cli::synth_config(cli::resolve_config({}, {{"wear_end_um", "200"}})), cli::UsageError);
}

TEST(Config, SeedsDerivePerRole) {
  const auto cfg = cli::resolve_config({}, {{"seed", "5"}});
  EXPECT_NE(cli::train_config(cfg, "classifier").seed, cli::train_config(cfg, "regressor").seed);
  EXPECT_EQ(cli::train_config(cfg, "classifier").seed, cli::train_config(cfg, "classifier").seed);
}

TEST(Config, WindowDefaults) {
  EXPECT_EQ(compute_window_size(cli::window_spec(cli::resolve_config({}, {}))), 7u);
  EXPECT_EQ(compute_window_size(cli::window_spec(cli::resolve_config({}, {{"desk_scale", "false"}}))), 727u);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}), cli::kExitUsage);
  EXPECT_EQ(run_cli({"generate", "--runs", "0", "--out", scratch("usage").string()}), cli::kExitUsage);
  EXPECT_EQ(run_cli({"generate", "--no-such-flag"}), cli::kExitUsage);
  EXPECT_EQ(run_cli({"train", "--data", "/nonexistent/dir", "--model", "/tmp/x"}), cli::kExitData);
}

TEST(Cli, GenerateIsDeterministic) {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  ASSERT_EQ(run_cli({"generate", "--runs", "2", "--seed", "3", "--run-seconds", "5", "--out", a.string()}), 0);
  ASSERT_EQ(run_cli({"generate", "--runs", "2", "--seed", "3", "--run-seconds", "5", "--out", b.string()}), 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(read_text(e.path()), read_text(b / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 4);
}

TEST(Cli, TrainEvaluatePredictReproducible) {
  const fs::path dir = generated("pipeline");
  const std::string data = (dir / "data").string();
  for (const char* name : {"m1", "m2"}) {
    ASSERT_EQ(run_cli(with_fast({"train", "--data", data, "--seed", "1", "--model", (dir / name).string()})), 0);
  }
  EXPECT_EQ(read_text(dir / "m1"), read_text(dir / "m2"));
  EXPECT_EQ(read_text(dir / "m1.loss.csv"), read_text(dir / "m2.loss.csv"));
  EXPECT_EQ(read_text(dir / "m1.de.csv"), read_text(dir / "m2.de.csv"));

  const ModelFile model = load_model(dir / "m1");
  ASSERT_TRUE(model.multistate);
  EXPECT_EQ(model.multistate->diagnoser.costs.size(), 4u);

  for (const char* out : {"e1", "e2"}) {
    ASSERT_EQ(run_cli({"evaluate", "--data", data, "--seed", "1", "--model", (dir / "m1").string(), "--out",
                       (dir / out).string()}),
              0);
  }
  EXPECT_EQ(read_text(dir / "e1" / "report.csv"), read_text(dir / "e2" / "report.csv"));
  const auto keys = parse_key_value(read_text(dir / "e1" / "report.txt"));
  for (const char* k : kMetricKeys) EXPECT_TRUE(keys.count(k)) << k;

  const std::string run = (dir / "data" / "run_000.csv").string();
  ASSERT_EQ(run_cli({"predict", "--model", (dir / "m1").string(), "--run", run, "--out", (dir / "p1.csv").string()}), 0);
  ASSERT_EQ(run_cli({"predict", "--model", (dir / "m1").string(), "--run", run, "--out", (dir / "p2.csv").string()}), 0);
  const std::string pred = read_text(dir / "p1.csv");
  EXPECT_EQ(pred, read_text(dir / "p2.csv"));
  // 12 s at 200 Hz in 7-sample frames
  EXPECT_EQ(std::count(pred.begin(), pred.end(), '\n'), 1 + 2400 / 7);
}

TEST(Cli, EcsDbnModelHasFourCosts) {
  const fs::path dir = generated("ecs");
  ASSERT_EQ(run_cli(with_fast({"train", "--kind", "ecs-dbn", "--data", (dir / "data").string(), "--model",
                               (dir / "ecs.model").string()})),
            0);
  const ModelFile m = load_model(dir / "ecs.model");
  ASSERT_TRUE(m.ecs);
  EXPECT_EQ(m.ecs->costs.size(), 4u);
}

TEST(Cli, TrialsAndComparisonsReproducible) {
  const fs::path dir = generated("trials");
  const std::string data = (dir / "data").string();
  for (const char* out : {"t1", "t2"}) {
    ASSERT_EQ(run_cli(with_fast({"evaluate", "--data", data, "--trials", "2", "--out", (dir / out).string()})), 0);
  }
  EXPECT_EQ(read_text(dir / "t1" / "report.txt"), read_text(dir / "t2" / "report.txt"));
  EXPECT_EQ(read_text(dir / "t1" / "report_trials.csv"), read_text(dir / "t2" / "report_trials.csv"));

  for (const char* out : {"a1", "a2"}) {
    ASSERT_EQ(run_cli(with_fast({"ablate-sensors", "--data", data, "--subsets", "all,force", "--out",
                                 (dir / out).string()})),
              0);
  }
  EXPECT_EQ(read_text(dir / "a1" / "ablation.csv"), read_text(dir / "a2" / "ablation.csv"));

  for (const char* out : {"c1", "c2"}) {
    ASSERT_EQ(run_cli(with_fast({"compare-frameworks", "--data", data, "--out", (dir / out).string()})), 0);
  }
  EXPECT_EQ(read_text(dir / "c1" / "comparison.csv"), read_text(dir / "c2" / "comparison.csv"));
}

TEST(Cli, MissingChannelIsDataError) {
  const fs::path dir = generated("channels");
  EXPECT_EQ(run_cli(with_fast({"evaluate", "--data", (dir / "data").string(), "--channels", "force,acoustic", "--out",
                               (dir / "e").string()})),
            cli::kExitData);
}

TEST(Cli, ConfigFileFeedsCommand) {
  const fs::path dir = scratch("config_file");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# generation settings\nruns = 2\nrun_seconds = 4\nseed = 11\n";
  }
  ASSERT_EQ(run_cli({"generate", "--config", (dir / "run.cfg").string(), "--runs", "1", "--out", (dir / "d").string()}),
            0);
  EXPECT_TRUE(fs::exists(dir / "d" / "run_000.csv"));
  EXPECT_FALSE(fs::exists(dir / "d" / "run_001.csv"));
  {
    std::ofstream bad(dir / "bad.cfg");
    bad << "nonsense_key = 3\n";
  }
  EXPECT_EQ(run_cli({"generate", "--config", (dir / "bad.cfg").string(), "--out", (dir / "d2").string()}),
            cli::kExitUsage);
}
