#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stackgame/config.hpp"
#include "stackgame/env.hpp"
#include "stackgame/learner.hpp"
#include "stackgame/oracle.hpp"

namespace stackgame::harness {

enum class Mode { softmax, greedy, uniform };

Mode mode_from_string(const std::string& name);
std::string to_string(Mode mode);

struct ExperimentConfig {
  // Model source: a saved model file, or a generated instance.
  std::string model_file;               // load when nonempty
  std::string model_kind = "tabular";   // "tabular" | "linear" when generated
  env::GameShape shape{2, 2, 2, 3, 0};  // for generated models
  std::uint64_t model_seed = 1;
  int initial_state = 0;                // point-mass start for generated models
  std::string model_export;             // optional: save resolved model here

  long episodes = 100;
  int cadence = 1;            // regret evaluation every n-th episode
  Mode mode = Mode::softmax;
  std::uint64_t master_seed = 1;
  bool record_timing = false;  // wall_ms column stays 0 when off
  bool rebuild_check = false;
  std::string checkpoint_path;

  double c1 = 1.0;
  double failure_prob = 0.1;
  double lambda = 1.0;
  std::optional<double> alpha_l;  // explicit overrides of the defaults
  std::optional<double> alpha_f;
  std::optional<double> beta;

  void validate() const;  // throws std::invalid_argument
};

struct RegretRecord {
  long k = 0;
  double leader_inc = 0.0;
  double leader_cum = 0.0;
  double follower_inc = 0.0;
  double follower_cum = 0.0;
  int a1 = 0;           // leader's realized first action this episode
  double wall_ms = 0.0;
};

// Called after plan() each episode; used by validation and the tests.
using EpisodeObserver =
    std::function<void(const learner::Learner& learner, long episode)>;

env::LinearMdpModel resolve_model(const ExperimentConfig& config);

learner::HyperParams build_hyperparams(const ExperimentConfig& config,
                                       const env::GameShape& shape);

// Runs K episodes: plan, roll out H steps (leader acts, follower observes the
// action and acts, the shared transition is recorded with both rewards), and
// at evaluation episodes compute both regret increments against the oracle
// best responses. Non-evaluated episodes hold the last evaluated increment.
// Deterministic in (model, config, master_seed) within one build.
std::vector<RegretRecord> run_experiment(const ExperimentConfig& config,
                                         const env::LinearMdpModel& model,
                                         const EpisodeObserver& observer = {});
std::vector<RegretRecord> run_experiment(const ExperimentConfig& config);

void write_csv(const std::vector<RegretRecord>& records, std::ostream& out);
std::string csv_string(const std::vector<RegretRecord>& records);

struct SweepGrid {
  std::vector<double> alpha_l;        // empty = keep base value
  std::vector<double> alpha_f;
  std::vector<double> c1;
  std::vector<std::uint64_t> seeds;   // empty = master_seed + cell index

  std::size_t cell_count() const;
};

struct SweepCell {
  std::size_t index = 0;
  std::optional<double> alpha_l;
  std::optional<double> alpha_f;
  double c1 = 1.0;
  std::uint64_t seed = 0;
  std::vector<RegretRecord> records;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;
};

// One run per grid point with an independent seed; per-cell failures are
// recorded, not fatal. Cells execute in a fixed enumeration order and do not
// share state, so results are independent of that order.
SweepResult run_sweep(const ExperimentConfig& base, const SweepGrid& grid);

void write_sweep_csv(const SweepResult& result, std::ostream& out);

// Greedy-failure fixture: two epsilon-close Q-table pairs for a one-shot
// 2x2 game. The greedy follower response swings the leader's marginal q by
// M - epsilon while the soft-max response (with values clipped at the
// algorithm's cap H) keeps the swing within epsilon*(1 + 2*alpha_f*H).
struct FixtureReport {
  double m = 0.0;
  double epsilon = 0.0;
  double alpha_f = 0.0;
  double value_cap = 0.0;  // the H in the bound and in the soft-max clipping
  double greedy_discrepancy = 0.0;
  double softmax_discrepancy = 0.0;
  double bound = 0.0;
  bool within_bound = false;
};

FixtureReport greedy_failure_fixture(double m = 10.0, double epsilon = 0.01,
                                     double alpha_f = 1.0,
                                     double value_cap = 1.0);

// Experiment config from key-value text (sections [model], [run],
// [hyperparams], optional [sweep]).
struct LoadedExperiment {
  ExperimentConfig config;
  SweepGrid grid;
};
LoadedExperiment experiment_from_config(const config::KeyValueFile& file,
                                        const std::string& base_dir);

std::string effective_config_text(const ExperimentConfig& config,
                                  const SweepGrid& grid);

}  // namespace stackgame::harness
