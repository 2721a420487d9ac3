#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "stackgame/config.hpp"
#include "stackgame/env.hpp"
#include "stackgame/harness.hpp"

using stackgame::Player;
using stackgame::env::GameShape;
using stackgame::env::LinearMdpModel;
using stackgame::env::TabularGame;
using stackgame::harness::ExperimentConfig;
using stackgame::harness::Mode;
using stackgame::harness::RegretRecord;
using stackgame::harness::SweepGrid;

namespace {

ExperimentConfig small_config(long episodes = 30, std::uint64_t seed = 11) {
  ExperimentConfig config;
  config.model_kind = "tabular";
  config.shape = GameShape{2, 2, 2, 2, 0};
  config.shape.feature_dim = config.shape.num_triples();
  config.model_seed = 3;
  config.episodes = episodes;
  config.master_seed = seed;
  config.c1 = 0.05;
  return config;
}

LinearMdpModel zero_reward_model() {
  TabularGame game =
      stackgame::env::random_tabular_game(GameShape{2, 2, 2, 2, 0}, 5);
  std::fill(game.rewards_leader.begin(), game.rewards_leader.end(), 0.0);
  std::fill(game.rewards_follower.begin(), game.rewards_follower.end(), 0.0);
  return stackgame::env::tabular_to_linear(game);
}

}  // namespace

TEST_CASE("zero-reward model yields identically zero regret") {
  const LinearMdpModel model = zero_reward_model();
  const auto records = stackgame::harness::run_experiment(small_config(25), model);
  REQUIRE(records.size() == 25);
  for (const RegretRecord& rec : records) {
    CHECK(rec.leader_inc == 0.0);
    CHECK(rec.follower_inc == 0.0);
    CHECK(rec.leader_cum == 0.0);
    CHECK(rec.follower_cum == 0.0);
  }
}

TEST_CASE("single-action games have no regret") {
  ExperimentConfig config = small_config(20);
  config.shape = GameShape{2, 1, 1, 3, 0};
  config.shape.feature_dim = config.shape.num_triples();
  const auto records = stackgame::harness::run_experiment(config);
  for (const RegretRecord& rec : records) {
    CHECK(rec.leader_inc == 0.0);
    CHECK(rec.follower_inc == 0.0);
  }
}

TEST_CASE("regret increments are nonnegative and cumulative sums nondecreasing") {
  const auto records = stackgame::harness::run_experiment(small_config(50));
  double prev_l = 0.0, prev_f = 0.0;
  for (const RegretRecord& rec : records) {
    CHECK(rec.leader_inc >= -1e-9);
    CHECK(rec.follower_inc >= -1e-9);
    CHECK(rec.leader_cum >= prev_l - 1e-9);
    CHECK(rec.follower_cum >= prev_f - 1e-9);
    prev_l = rec.leader_cum;
    prev_f = rec.follower_cum;
  }
}

TEST_CASE("identical configs produce byte-identical CSVs") {
  const ExperimentConfig config = small_config(40, 77);
  const std::string a =
      stackgame::harness::csv_string(stackgame::harness::run_experiment(config));
  const std::string b =
      stackgame::harness::csv_string(stackgame::harness::run_experiment(config));
  CHECK(a == b);
}

TEST_CASE("different seeds produce different trajectories") {
  ExperimentConfig config = small_config(40, 1);
  const auto a = stackgame::harness::run_experiment(config);
  config.master_seed = 2;
  const auto b = stackgame::harness::run_experiment(config);
  bool any_different = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    any_different = any_different || a[i].a1 != b[i].a1 ||
                    a[i].leader_inc != b[i].leader_inc;
  }
  CHECK(any_different);
}

TEST_CASE("CSV format: header, LF endings, 15-significant-digit decimals") {
  std::vector<RegretRecord> records(1);
  records[0].k = 1;
  records[0].leader_inc = 1.0 / 3.0;
  records[0].leader_cum = 1.0 / 3.0;
  records[0].follower_inc = 2.0 / 3.0;
  records[0].follower_cum = 2.0 / 3.0;
  records[0].a1 = 1;
  records[0].wall_ms = 0.0;
  const std::string csv = stackgame::harness::csv_string(records);
  CHECK(csv ==
        "k,leader_inc,leader_cum,follower_inc,follower_cum,a1,wall_ms\n"
        "1,0.333333333333333,0.333333333333333,0.666666666666667,"
        "0.666666666666667,1,0\n");
  CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("wall_ms stays zero unless timing is enabled") {
  ExperimentConfig config = small_config(10);
  auto records = stackgame::harness::run_experiment(config);
  for (const RegretRecord& rec : records) CHECK(rec.wall_ms == 0.0);

  config.record_timing = true;
  records = stackgame::harness::run_experiment(config);
  double total = 0.0;
  for (const RegretRecord& rec : records) total += rec.wall_ms;
  CHECK(total > 0.0);
}

TEST_CASE("cadence holds the last evaluated increment") {
  ExperimentConfig config = small_config(21);
  config.cadence = 5;
  const auto records = stackgame::harness::run_experiment(config);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const long k = records[i].k;
    if ((k - 1) % 5 != 0) {
      CHECK(records[i].leader_inc == records[i - 1].leader_inc);
      CHECK(records[i].follower_inc == records[i - 1].follower_inc);
    }
  }
}

TEST_CASE("greedy ablation produces a complete finite trace") {
  ExperimentConfig config = small_config(60);
  config.mode = Mode::greedy;
  const auto records = stackgame::harness::run_experiment(config);
  REQUIRE(records.size() == 60);
  for (const RegretRecord& rec : records) {
    CHECK(std::isfinite(rec.leader_cum));
    CHECK(std::isfinite(rec.follower_cum));
    CHECK(rec.leader_inc >= -1e-9);
    CHECK(rec.follower_inc >= -1e-9);
  }
}

TEST_CASE("uniform baseline runs and accumulates regret") {
  ExperimentConfig config = small_config(60);
  config.mode = Mode::uniform;
  const auto records = stackgame::harness::run_experiment(config);
  REQUIRE(records.size() == 60);
  CHECK(records.back().leader_cum > 0.0);
  for (const RegretRecord& rec : records) {
    CHECK(rec.leader_inc >= -1e-9);
    CHECK(rec.follower_inc >= -1e-9);
  }
}

TEST_CASE("singleton sweep equals a plain run") {
  const ExperimentConfig base = small_config(25, 9);
  const SweepGrid grid;  // empty: one cell, seed = master_seed + 0
  const auto sweep = stackgame::harness::run_sweep(base, grid);
  REQUIRE(sweep.cells.size() == 1);
  CHECK_FALSE(sweep.cells[0].failed);
  const auto plain = stackgame::harness::run_experiment(base);
  REQUIRE(sweep.cells[0].records.size() == plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(sweep.cells[0].records[i].leader_cum == plain[i].leader_cum);
    CHECK(sweep.cells[0].records[i].follower_cum == plain[i].follower_cum);
  }
}

TEST_CASE("sweep cells are independent of enumeration order") {
  const ExperimentConfig base = small_config(15, 4);
  SweepGrid forward;
  forward.c1 = {0.05, 0.2};
  forward.seeds = {101, 202};
  SweepGrid reversed;
  reversed.c1 = {0.2, 0.05};
  reversed.seeds = {202, 101};

  const auto a = stackgame::harness::run_sweep(base, forward);
  const auto b = stackgame::harness::run_sweep(base, reversed);
  REQUIRE(a.cells.size() == 4);
  REQUIRE(b.cells.size() == 4);
  for (const auto& cell : a.cells) {
    bool matched = false;
    for (const auto& other : b.cells) {
      if (other.c1 == cell.c1 && other.seed == cell.seed) {
        matched = true;
        REQUIRE(other.records.size() == cell.records.size());
        for (std::size_t i = 0; i < cell.records.size(); ++i) {
          CHECK(other.records[i].leader_cum == cell.records[i].leader_cum);
        }
      }
    }
    CHECK(matched);
  }
}

TEST_CASE("sweep records per-cell failures without aborting") {
  ExperimentConfig base = small_config(5);
  SweepGrid grid;
  grid.c1 = {0.05, -1.0};  // second cell has an invalid c1
  const auto result = stackgame::harness::run_sweep(base, grid);
  REQUIRE(result.cells.size() == 2);
  CHECK_FALSE(result.cells[0].failed);
  CHECK(result.cells[1].failed);
  CHECK_FALSE(result.cells[1].error.empty());
}

TEST_CASE("sweep CSV carries grid coordinate columns") {
  const ExperimentConfig base = small_config(3);
  SweepGrid grid;
  grid.c1 = {0.05};
  grid.alpha_f = {2.5};
  const auto result = stackgame::harness::run_sweep(base, grid);
  std::ostringstream out;
  stackgame::harness::write_sweep_csv(result, out);
  const std::string csv = out.str();
  CHECK(csv.rfind("alpha_l,alpha_f,c1,seed,k,", 0) == 0);
  CHECK(csv.find("default,2.5,0.05,") != std::string::npos);
}

TEST_CASE("greedy failure fixture reproduces the pinned discrepancies") {
  const auto report = stackgame::harness::greedy_failure_fixture(10.0, 0.01, 1.0, 1.0);
  CHECK(report.greedy_discrepancy == doctest::Approx(9.99).epsilon(1e-12));
  CHECK(report.softmax_discrepancy <= 0.01 * (1.0 + 2.0));
  CHECK(report.bound == doctest::Approx(0.03));
  CHECK(report.within_bound);

  // The follower's soft-max policy shift stays within the Lipschitz budget.
  const auto tiny = stackgame::harness::greedy_failure_fixture(10.0, 0.0, 1.0, 1.0);
  CHECK(tiny.greedy_discrepancy == 0.0);
  CHECK(tiny.softmax_discrepancy == 0.0);
}

TEST_CASE("fixture scales with its parameters") {
  const auto report = stackgame::harness::greedy_failure_fixture(5.0, 0.1, 2.0, 1.0);
  CHECK(report.greedy_discrepancy == doctest::Approx(4.9).epsilon(1e-12));
  CHECK(report.bound == doctest::Approx(0.1 * (1.0 + 4.0)));
  CHECK(report.within_bound);
}

TEST_CASE("experiment config loads from key-value text with defaults") {
  std::istringstream text(
      "[model]\n"
      "source = tabular\n"
      "seed = 9\n"
      "num_states = 2\n"
      "horizon = 2\n"
      "\n"
      "[run]\n"
      "episodes = 12\n"
      "mode = greedy\n"
      "master_seed = 5\n"
      "\n"
      "[hyperparams]\n"
      "c1 = 0.25\n");
  const auto file = stackgame::config::KeyValueFile::parse(text);
  const auto loaded = stackgame::harness::experiment_from_config(file, "");
  CHECK(loaded.config.model_seed == 9);
  CHECK(loaded.config.shape.num_states == 2);
  CHECK(loaded.config.shape.feature_dim == 8);  // one-hot over triples
  CHECK(loaded.config.episodes == 12);
  CHECK(loaded.config.mode == Mode::greedy);
  CHECK(loaded.config.master_seed == 5);
  CHECK(loaded.config.c1 == 0.25);
  CHECK(loaded.config.cadence == 1);
  CHECK_FALSE(loaded.config.record_timing);
}

TEST_CASE("generated models honor the configured initial state") {
  std::istringstream text(
      "[model]\n"
      "source = tabular\n"
      "seed = 3\n"
      "num_states = 3\n"
      "horizon = 2\n"
      "initial_state = 2\n"
      "[run]\n"
      "episodes = 2\n");
  const auto file = stackgame::config::KeyValueFile::parse(text);
  const auto loaded = stackgame::harness::experiment_from_config(file, "");
  const LinearMdpModel model = stackgame::harness::resolve_model(loaded.config);
  CHECK(model.initial_state() == 2);

  const LinearMdpModel linear = stackgame::env::random_linear_mdp(
      GameShape{3, 2, 2, 2, 4}, 5, 1);
  CHECK(linear.initial_state() == 1);
}

TEST_CASE("unknown config keys are rejected") {
  std::istringstream text("[run]\nepisodess = 5\n");
  const auto file = stackgame::config::KeyValueFile::parse(text);
  CHECK_THROWS_AS(stackgame::harness::experiment_from_config(file, ""),
                  std::runtime_error);

  std::istringstream bad_section("[walk]\nepisodes = 5\n");
  const auto file2 = stackgame::config::KeyValueFile::parse(bad_section);
  CHECK_THROWS_AS(stackgame::harness::experiment_from_config(file2, ""),
                  std::runtime_error);
}

TEST_CASE("config overrides replace file values") {
  std::istringstream text("[run]\nepisodes = 50\n");
  auto file = stackgame::config::KeyValueFile::parse(text);
  file.set("run.episodes", "7");
  file.set("hyperparams.c1", "0.5");
  const auto loaded = stackgame::harness::experiment_from_config(file, "");
  CHECK(loaded.config.episodes == 7);
  CHECK(loaded.config.c1 == 0.5);
}

TEST_CASE("effective config text echoes the resolved settings") {
  ExperimentConfig config = small_config(33, 21);
  config.alpha_f = 4.5;
  const std::string text =
      stackgame::harness::effective_config_text(config, SweepGrid{});
  CHECK(text.find("episodes = 33") != std::string::npos);
  CHECK(text.find("master_seed = 21") != std::string::npos);
  CHECK(text.find("alpha_f = 4.5") != std::string::npos);
  CHECK(text.find("mode = softmax") != std::string::npos);
}

TEST_CASE("checkpoint files are written when configured") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "stackgame_harness_test";
  fs::create_directories(dir);
  const fs::path checkpoint = dir / "checkpoint.txt";

  ExperimentConfig config = small_config(4);
  config.checkpoint_path = checkpoint.string();
  stackgame::harness::run_experiment(config);

  std::ifstream in(checkpoint);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  CHECK(text.find("[checkpoint k=1 h=1]") != std::string::npos);
  CHECK(text.find("[checkpoint k=4 h=2]") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("model export writes a loadable model file") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "stackgame_export_test";
  fs::create_directories(dir);
  const fs::path path = dir / "model.txt";

  ExperimentConfig config = small_config(2);
  config.model_export = path.string();
  stackgame::harness::run_experiment(config);

  const LinearMdpModel loaded = stackgame::env::load_model_file(path.string());
  CHECK(loaded.shape().num_states == 2);
  CHECK(loaded.shape().feature_dim == 8);
  fs::remove_all(dir);
}

TEST_CASE("run_experiment rejects invalid configs") {
  ExperimentConfig config = small_config(0);
  CHECK_THROWS_AS(stackgame::harness::run_experiment(config),
                  std::invalid_argument);
  config = small_config(5);
  config.cadence = 0;
  CHECK_THROWS_AS(stackgame::harness::run_experiment(config),
                  std::invalid_argument);
}
