#include "stackgame/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stackgame::harness {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

// Soft-max gap bounds realized by the episode policies: for every state,
// max_a q_l - <pi_l, q_l> <= log|A|/alpha_l, and the follower analogue per
// (x, a). Exact properties of the soft-max; checked with a small slack.
void check_softmax_gaps(const learner::Learner& learner,
                        const oracle::PolicyTable& table, long episode) {
  const double slack = 1e-9;
  const double alpha_l = learner.params().alpha_l;
  const double alpha_f = learner.params().alpha_f;
  const double gap_l =
      std::isinf(alpha_l) ? 0.0
                          : std::log(table.num_leader_actions) / alpha_l;
  const double gap_f =
      std::isinf(alpha_f) ? 0.0
                          : std::log(table.num_follower_actions) / alpha_f;
  for (int h = 0; h < table.horizon; ++h) {
    for (int x = 0; x < table.num_states; ++x) {
      const std::vector<double> mq = learner.marginal_q(h, x);
      double best = mq[0], mean = 0.0;
      const policy::ActionDistribution& pi_l = table.leader_at(h, x);
      for (int a = 0; a < table.num_leader_actions; ++a) {
        best = std::max(best, mq[a]);
        mean += pi_l.probs[a] * mq[a];
      }
      if (best - mean > gap_l + slack) {
        throw std::runtime_error(
            "soft-max gap bound violated for leader at episode " +
            std::to_string(episode));
      }
      for (int a = 0; a < table.num_leader_actions; ++a) {
        const std::vector<double> qf =
            learner.q_values(Player::follower, h, x, a);
        double fbest = qf[0], fmean = 0.0;
        const policy::ActionDistribution& pi_f = table.follower_at(h, x, a);
        for (int b = 0; b < table.num_follower_actions; ++b) {
          fbest = std::max(fbest, qf[b]);
          fmean += pi_f.probs[b] * qf[b];
        }
        if (fbest - fmean > gap_f + slack) {
          throw std::runtime_error(
              "soft-max gap bound violated for follower at episode " +
              std::to_string(episode));
        }
      }
    }
  }
}

int sample_uniform(int n, Rng& rng) {
  const double u = rng.next_uniform();
  int i = static_cast<int>(u * n);
  return i >= n ? n - 1 : i;
}

}  // namespace

Mode mode_from_string(const std::string& name) {
  if (name == "softmax") return Mode::softmax;
  if (name == "greedy") return Mode::greedy;
  if (name == "uniform") return Mode::uniform;
  throw std::runtime_error("unknown mode: " + name +
                           " (expected softmax, greedy, or uniform)");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::softmax: return "softmax";
    case Mode::greedy: return "greedy";
    case Mode::uniform: return "uniform";
  }
  return "softmax";
}

void ExperimentConfig::validate() const {
  if (episodes < 1) throw std::invalid_argument("config: episodes must be >= 1");
  if (cadence < 1) throw std::invalid_argument("config: cadence must be >= 1");
  if (model_file.empty()) {
    if (model_kind != "tabular" && model_kind != "linear") {
      throw std::invalid_argument("config: model kind must be tabular or linear");
    }
    if (!(shape.num_states >= 1 && shape.num_leader_actions >= 1 &&
          shape.num_follower_actions >= 1 && shape.horizon >= 1)) {
      throw std::invalid_argument("config: degenerate model shape");
    }
    if (model_kind == "linear" && shape.feature_dim < 1) {
      throw std::invalid_argument("config: linear model needs feature_dim >= 1");
    }
  }
}

env::LinearMdpModel resolve_model(const ExperimentConfig& config) {
  config.validate();
  if (!config.model_file.empty()) {
    return env::load_model_file(config.model_file);
  }
  if (config.model_kind == "linear") {
    return env::random_linear_mdp(config.shape, config.model_seed,
                                  config.initial_state);
  }
  env::TabularGame game = env::random_tabular_game(config.shape, config.model_seed);
  game.initial_state = config.initial_state;
  return env::tabular_to_linear(game);
}

learner::HyperParams build_hyperparams(const ExperimentConfig& config,
                                       const env::GameShape& shape) {
  learner::HyperParams params = learner::default_hyperparams(
      shape, config.episodes, config.failure_prob, config.c1);
  if (config.lambda != 1.0) {
    params.lambda = config.lambda;
    params.validate();
  }
  if (config.alpha_l) params.alpha_l = *config.alpha_l;
  if (config.alpha_f) params.alpha_f = *config.alpha_f;
  if (config.beta) params.beta = *config.beta;
  if (config.mode == Mode::greedy) {
    params.alpha_l = std::numeric_limits<double>::infinity();
    params.alpha_f = std::numeric_limits<double>::infinity();
  }
  params.validate();
  return params;
}

std::vector<RegretRecord> run_experiment(const ExperimentConfig& config,
                                         const env::LinearMdpModel& model,
                                         const EpisodeObserver& observer) {
  config.validate();
  const env::GameShape& shape = model.shape();
  const int x1 = model.initial_state();

  learner::HyperParams params = build_hyperparams(config, shape);
  learner::Learner learner(model, params);
  learner.set_rebuild_check(config.rebuild_check);
  Rng rng(config.master_seed);

  std::ofstream checkpoint;
  if (!config.checkpoint_path.empty() && config.mode != Mode::uniform) {
    checkpoint.open(config.checkpoint_path);
    if (!checkpoint) {
      throw std::runtime_error("cannot open checkpoint file: " +
                               config.checkpoint_path);
    }
  }

  const oracle::PolicyTable uniform_table = oracle::PolicyTable::uniform(shape);
  std::vector<RegretRecord> records;
  records.reserve(config.episodes);
  double leader_cum = 0.0, follower_cum = 0.0;
  double held_leader_inc = 0.0, held_follower_inc = 0.0;

  for (long k = 1; k <= config.episodes; ++k) {
    const auto start = std::chrono::steady_clock::now();
    const bool learning = config.mode != Mode::uniform;

    if (learning) {
      learner.plan(k);
      if (observer) observer(learner, k);
      if (checkpoint.is_open()) learner.write_checkpoint(checkpoint, k);
    }

    // Roll out one episode under the episode-k policies.
    int x = x1;
    int a1 = -1;
    for (int h = 0; h < shape.horizon; ++h) {
      const int a = learning ? learner.act_leader(h, x, rng)
                             : sample_uniform(shape.num_leader_actions, rng);
      const int b = learning ? learner.act_follower(h, x, a, rng)
                             : sample_uniform(shape.num_follower_actions, rng);
      if (h == 0) a1 = a;
      const double r_l = model.reward(Player::leader, h, x, a, b);
      const double r_f = model.reward(Player::follower, h, x, a, b);
      const int x_next = model.transition_sample(h, x, a, b, rng);
      if (learning) {
        learner.record_transition({h, x, a, b, r_l, r_f, x_next});
      }
      x = x_next;
    }

    const bool evaluate = (k - 1) % config.cadence == 0;
    if (evaluate) {
      const oracle::PolicyTable table =
          learning ? oracle::materialize_learner_policy(learner, model)
                   : uniform_table;
      if (learning) check_softmax_gaps(learner, table, k);
      const oracle::ValueTables values = oracle::evaluate_joint(model, table);
      const oracle::LeaderBestResponse leader_br =
          oracle::best_response_leader(model, table);
      const oracle::FollowerBestResponse follower_br =
          oracle::best_response_follower(model, table);

      held_leader_inc = leader_br.value - values.v(Player::leader, 0, x1);
      held_follower_inc = follower_br.value_by_first_action[a1] -
                          values.bar_v_f(0, x1, a1);
      if (held_leader_inc < -1e-9 || held_follower_inc < -1e-9) {
        throw std::runtime_error(
            "best-response dominance violated at episode " + std::to_string(k) +
            ": leader_inc=" + format_double(held_leader_inc) +
            " follower_inc=" + format_double(held_follower_inc));
      }
    }
    leader_cum += held_leader_inc;
    follower_cum += held_follower_inc;

    RegretRecord rec;
    rec.k = k;
    rec.leader_inc = held_leader_inc;
    rec.leader_cum = leader_cum;
    rec.follower_inc = held_follower_inc;
    rec.follower_cum = follower_cum;
    rec.a1 = a1;
    if (config.record_timing) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    }
    records.push_back(rec);
  }
  return records;
}

std::vector<RegretRecord> run_experiment(const ExperimentConfig& config) {
  const env::LinearMdpModel model = resolve_model(config);
  if (!config.model_export.empty()) {
    env::save_model_file(model, config.model_export);
  }
  return run_experiment(config, model);
}

void write_csv(const std::vector<RegretRecord>& records, std::ostream& out) {
  out << "k,leader_inc,leader_cum,follower_inc,follower_cum,a1,wall_ms\n";
  for (const RegretRecord& rec : records) {
    out << rec.k << ',' << format_double(rec.leader_inc) << ','
        << format_double(rec.leader_cum) << ','
        << format_double(rec.follower_inc) << ','
        << format_double(rec.follower_cum) << ',' << rec.a1 << ','
        << format_double(rec.wall_ms) << '\n';
  }
}

std::string csv_string(const std::vector<RegretRecord>& records) {
  std::ostringstream out;
  write_csv(records, out);
  return out.str();
}

std::size_t SweepGrid::cell_count() const {
  const std::size_t n_al = alpha_l.empty() ? 1 : alpha_l.size();
  const std::size_t n_af = alpha_f.empty() ? 1 : alpha_f.size();
  const std::size_t n_c1 = c1.empty() ? 1 : c1.size();
  const std::size_t n_seed = seeds.empty() ? 1 : seeds.size();
  return n_al * n_af * n_c1 * n_seed;
}

SweepResult run_sweep(const ExperimentConfig& base, const SweepGrid& grid) {
  base.validate();
  const env::LinearMdpModel model = resolve_model(base);

  SweepResult result;
  const std::size_t n_al = grid.alpha_l.empty() ? 1 : grid.alpha_l.size();
  const std::size_t n_af = grid.alpha_f.empty() ? 1 : grid.alpha_f.size();
  const std::size_t n_c1 = grid.c1.empty() ? 1 : grid.c1.size();
  const std::size_t n_seed = grid.seeds.empty() ? 1 : grid.seeds.size();

  std::size_t index = 0;
  for (std::size_t i = 0; i < n_al; ++i) {
    for (std::size_t j = 0; j < n_af; ++j) {
      for (std::size_t c = 0; c < n_c1; ++c) {
        for (std::size_t s = 0; s < n_seed; ++s) {
          ExperimentConfig cell_config = base;
          SweepCell cell;
          cell.index = index;
          if (!grid.alpha_l.empty()) {
            cell_config.alpha_l = grid.alpha_l[i];
            cell.alpha_l = grid.alpha_l[i];
          }
          if (!grid.alpha_f.empty()) {
            cell_config.alpha_f = grid.alpha_f[j];
            cell.alpha_f = grid.alpha_f[j];
          }
          if (!grid.c1.empty()) cell_config.c1 = grid.c1[c];
          cell.c1 = cell_config.c1;
          // Documented seed splitting: explicit grid seeds when given,
          // otherwise master_seed + cell index.
          cell_config.master_seed = grid.seeds.empty()
                                        ? base.master_seed + index
                                        : grid.seeds[s];
          cell.seed = cell_config.master_seed;
          try {
            cell.records = run_experiment(cell_config, model);
          } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
          }
          result.cells.push_back(std::move(cell));
          ++index;
        }
      }
    }
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "alpha_l,alpha_f,c1,seed,"
      << "k,leader_inc,leader_cum,follower_inc,follower_cum,a1,wall_ms\n";
  for (const SweepCell& cell : result.cells) {
    if (cell.failed) continue;
    const std::string al =
        cell.alpha_l ? format_double(*cell.alpha_l) : "default";
    const std::string af =
        cell.alpha_f ? format_double(*cell.alpha_f) : "default";
    for (const RegretRecord& rec : cell.records) {
      out << al << ',' << af << ',' << format_double(cell.c1) << ','
          << cell.seed << ',' << rec.k << ',' << format_double(rec.leader_inc)
          << ',' << format_double(rec.leader_cum) << ','
          << format_double(rec.follower_inc) << ','
          << format_double(rec.follower_cum) << ',' << rec.a1 << ','
          << format_double(rec.wall_ms) << '\n';
    }
  }
}

FixtureReport greedy_failure_fixture(double m, double epsilon, double alpha_f,
                                     double value_cap) {
  FixtureReport report;
  report.m = m;
  report.epsilon = epsilon;
  report.alpha_f = alpha_f;
  report.value_cap = value_cap;

  // Two epsilon-close (Q_l, Q_f) table pairs, rows indexed by the leader
  // action, columns by the follower action. The follower tables are arranged
  // so the greedy response under pair 1 picks b1 at a1 (marginal q = M - eps)
  // and under pair 2 picks b2 (marginal q = 0).
  const double leader_1[2][2] = {{m - epsilon, 0.0}, {0.0, 0.0}};
  const double leader_2[2][2] = {{m, 0.0}, {0.0, 0.0}};
  const double follower_1[2][2] = {{1.0 + epsilon / 2, 1.0 - epsilon / 2},
                                   {1.0 + epsilon / 2, 1.0 - epsilon / 2}};
  const double follower_2[2][2] = {{1.0 - epsilon / 2, 1.0 + epsilon / 2},
                                   {1.0, 1.0 - epsilon / 2}};

  const auto marginal = [](const double (&leader)[2][2],
                           const double (&follower)[2][2], double alpha,
                           double cap, int a) {
    std::vector<double> f_row(2), l_row(2);
    for (int b = 0; b < 2; ++b) {
      f_row[b] = std::min(follower[a][b], cap);
      l_row[b] = std::min(leader[a][b], cap);
    }
    return policy::expected_value(policy::soft_max(f_row, alpha), l_row);
  };

  const double inf = std::numeric_limits<double>::infinity();
  const double nocap = std::numeric_limits<double>::max();
  double greedy = 0.0, smooth = 0.0;
  for (int a = 0; a < 2; ++a) {
    greedy = std::max(greedy,
                      std::abs(marginal(leader_1, follower_1, inf, nocap, a) -
                               marginal(leader_2, follower_2, inf, nocap, a)));
    smooth = std::max(
        smooth, std::abs(marginal(leader_1, follower_1, alpha_f, value_cap, a) -
                         marginal(leader_2, follower_2, alpha_f, value_cap, a)));
  }
  report.greedy_discrepancy = greedy;
  report.softmax_discrepancy = smooth;
  report.bound = epsilon * (1.0 + 2.0 * alpha_f * value_cap);
  report.within_bound = smooth <= report.bound + 1e-12;
  return report;
}

namespace {

std::string join_path(const std::string& base, const std::string& path) {
  if (path.empty() || path.front() == '/' || base.empty()) return path;
  return base + "/" + path;
}

}  // namespace

LoadedExperiment experiment_from_config(const config::KeyValueFile& file,
                                        const std::string& base_dir) {
  static const std::map<std::string, std::vector<std::string>> known = {
      {"model",
       {"source", "path", "seed", "num_states", "num_leader_actions",
        "num_follower_actions", "horizon", "feature_dim", "initial_state",
        "export"}},
      {"run",
       {"episodes", "cadence", "mode", "master_seed", "output", "run_name",
        "timing", "checkpoint", "rebuild_check"}},
      {"hyperparams",
       {"c1", "failure_prob", "lambda", "alpha_l", "alpha_f", "beta"}},
      {"sweep", {"alpha_l", "alpha_f", "c1", "seeds"}},
  };
  for (const auto& [section, keys] : file.sections()) {
    const auto it = known.find(section);
    if (it == known.end()) {
      throw std::runtime_error("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      (void)value;
      if (std::find(it->second.begin(), it->second.end(), key) ==
          it->second.end()) {
        throw std::runtime_error("config: unknown key " + section + "." + key);
      }
    }
  }

  LoadedExperiment loaded;
  ExperimentConfig& config = loaded.config;

  const std::string source = file.get("model", "source", "tabular");
  if (source == "file") {
    const std::string path = file.get("model", "path", "");
    if (path.empty()) {
      throw std::runtime_error("config: model.source=file requires model.path");
    }
    config.model_file = join_path(base_dir, path);
  } else if (source == "tabular" || source == "linear") {
    config.model_kind = source;
    config.shape.num_states =
        static_cast<int>(file.get_long("model", "num_states", 2));
    config.shape.num_leader_actions =
        static_cast<int>(file.get_long("model", "num_leader_actions", 2));
    config.shape.num_follower_actions =
        static_cast<int>(file.get_long("model", "num_follower_actions", 2));
    config.shape.horizon = static_cast<int>(file.get_long("model", "horizon", 3));
    config.shape.feature_dim =
        static_cast<int>(file.get_long("model", "feature_dim", 0));
    if (source == "tabular") {
      config.shape.feature_dim = config.shape.num_triples();
    }
    config.model_seed =
        static_cast<std::uint64_t>(file.get_long("model", "seed", 1));
    config.initial_state =
        static_cast<int>(file.get_long("model", "initial_state", 0));
  } else {
    throw std::runtime_error("config: model.source must be file, tabular, or linear");
  }
  const std::string export_path = file.get("model", "export", "");
  if (!export_path.empty()) config.model_export = join_path(base_dir, export_path);

  config.episodes = file.get_long("run", "episodes", 100);
  config.cadence = static_cast<int>(file.get_long("run", "cadence", 1));
  config.mode = mode_from_string(file.get("run", "mode", "softmax"));
  config.master_seed =
      static_cast<std::uint64_t>(file.get_long("run", "master_seed", 1));
  const std::string timing = file.get("run", "timing", "none");
  if (timing == "wall") {
    config.record_timing = true;
  } else if (timing != "none") {
    throw std::runtime_error("config: run.timing must be none or wall");
  }
  config.rebuild_check = file.get_bool("run", "rebuild_check", false);
  const std::string checkpoint = file.get("run", "checkpoint", "");
  if (!checkpoint.empty()) config.checkpoint_path = join_path(base_dir, checkpoint);

  config.c1 = file.get_double("hyperparams", "c1", 1.0);
  config.failure_prob = file.get_double("hyperparams", "failure_prob", 0.1);
  config.lambda = file.get_double("hyperparams", "lambda", 1.0);
  if (file.has("hyperparams", "alpha_l")) {
    config.alpha_l = file.get_double("hyperparams", "alpha_l", 0.0);
  }
  if (file.has("hyperparams", "alpha_f")) {
    config.alpha_f = file.get_double("hyperparams", "alpha_f", 0.0);
  }
  if (file.has("hyperparams", "beta")) {
    config.beta = file.get_double("hyperparams", "beta", 0.0);
  }

  loaded.grid.alpha_l = file.get_list("sweep", "alpha_l");
  loaded.grid.alpha_f = file.get_list("sweep", "alpha_f");
  loaded.grid.c1 = file.get_list("sweep", "c1");
  for (double seed : file.get_list("sweep", "seeds")) {
    loaded.grid.seeds.push_back(static_cast<std::uint64_t>(seed));
  }

  config.validate();
  return loaded;
}

std::string effective_config_text(const ExperimentConfig& config,
                                  const SweepGrid& grid) {
  std::ostringstream out;
  out << "[model]\n";
  if (!config.model_file.empty()) {
    out << "source = file\n";
    out << "path = " << config.model_file << '\n';
  } else {
    out << "source = " << config.model_kind << '\n';
    out << "seed = " << config.model_seed << '\n';
    out << "num_states = " << config.shape.num_states << '\n';
    out << "num_leader_actions = " << config.shape.num_leader_actions << '\n';
    out << "num_follower_actions = " << config.shape.num_follower_actions << '\n';
    out << "horizon = " << config.shape.horizon << '\n';
    out << "feature_dim = " << config.shape.feature_dim << '\n';
    out << "initial_state = " << config.initial_state << '\n';
  }
  if (!config.model_export.empty()) out << "export = " << config.model_export << '\n';
  out << "\n[run]\n";
  out << "episodes = " << config.episodes << '\n';
  out << "cadence = " << config.cadence << '\n';
  if (config.cadence > 1) {
    out << "# cadence > 1: increments between evaluations are held values "
           "(approximation)\n";
  }
  out << "mode = " << to_string(config.mode) << '\n';
  out << "master_seed = " << config.master_seed << '\n';
  out << "timing = " << (config.record_timing ? "wall" : "none") << '\n';
  out << "rebuild_check = " << (config.rebuild_check ? "on" : "off") << '\n';
  if (!config.checkpoint_path.empty()) {
    out << "checkpoint = " << config.checkpoint_path << '\n';
  }
  out << "\n[hyperparams]\n";
  out << "c1 = " << format_double(config.c1) << '\n';
  out << "failure_prob = " << format_double(config.failure_prob) << '\n';
  out << "lambda = " << format_double(config.lambda) << '\n';
  if (config.alpha_l) out << "alpha_l = " << format_double(*config.alpha_l) << '\n';
  if (config.alpha_f) out << "alpha_f = " << format_double(*config.alpha_f) << '\n';
  if (config.beta) out << "beta = " << format_double(*config.beta) << '\n';
  if (grid.cell_count() > 1) {
    out << "\n[sweep]\n";
    auto write_list = [&out](const char* name, const std::vector<double>& v) {
      if (v.empty()) return;
      out << name << " =";
      for (double x : v) out << ' ' << format_double(x);
      out << '\n';
    };
    write_list("alpha_l", grid.alpha_l);
    write_list("alpha_f", grid.alpha_f);
    write_list("c1", grid.c1);
    if (!grid.seeds.empty()) {
      out << "seeds =";
      for (std::uint64_t s : grid.seeds) out << ' ' << s;
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace stackgame::harness
