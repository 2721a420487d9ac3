#include "stackgame/validate.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "stackgame/env.hpp"
#include "stackgame/harness.hpp"
#include "stackgame/learner.hpp"
#include "stackgame/linalg.hpp"
#include "stackgame/oracle.hpp"
#include "stackgame/policy.hpp"
#include "stackgame/rng.hpp"

namespace stackgame::validate {

namespace {

std::vector<double> random_unit_ball(int dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm_sq = 0.0;
  for (int i = 0; i < dim; ++i) {
    v[i] = 2.0 * rng.next_uniform() - 1.0;
    norm_sq += v[i] * v[i];
  }
  const double norm = std::sqrt(norm_sq);
  if (norm > 1.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

// Direct O(d^3) inversion, independent of the library's Cholesky path.
std::vector<double> invert_gauss_jordan(std::vector<double> m, int d) {
  std::vector<double> inv(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) inv[static_cast<std::size_t>(i) * d + i] = 1.0;
  for (int col = 0; col < d; ++col) {
    int pivot = col;
    for (int r = col + 1; r < d; ++r) {
      if (std::abs(m[static_cast<std::size_t>(r) * d + col]) >
          std::abs(m[static_cast<std::size_t>(pivot) * d + col])) {
        pivot = r;
      }
    }
    for (int c = 0; c < d; ++c) {
      std::swap(m[static_cast<std::size_t>(col) * d + c],
                m[static_cast<std::size_t>(pivot) * d + c]);
      std::swap(inv[static_cast<std::size_t>(col) * d + c],
                inv[static_cast<std::size_t>(pivot) * d + c]);
    }
    const double diag = m[static_cast<std::size_t>(col) * d + col];
    for (int c = 0; c < d; ++c) {
      m[static_cast<std::size_t>(col) * d + c] /= diag;
      inv[static_cast<std::size_t>(col) * d + c] /= diag;
    }
    for (int r = 0; r < d; ++r) {
      if (r == col) continue;
      const double factor = m[static_cast<std::size_t>(r) * d + col];
      if (factor == 0.0) continue;
      for (int c = 0; c < d; ++c) {
        m[static_cast<std::size_t>(r) * d + c] -=
            factor * m[static_cast<std::size_t>(col) * d + c];
        inv[static_cast<std::size_t>(r) * d + c] -=
            factor * inv[static_cast<std::size_t>(col) * d + c];
      }
    }
  }
  return inv;
}

struct Check {
  std::string name;
  std::function<std::string()> body;  // empty string = pass, else failure detail
};

std::string linalg_sherman_morrison() {
  const int d = 16;
  Rng rng(11);
  linalg::GramState state(d, 1.0);
  for (int t = 0; t < 1000; ++t) {
    state.rank_one_update(random_unit_ball(d, rng));
  }
  const std::vector<double> direct = invert_gauss_jordan(state.gram_data(), d);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < d * d; ++i) {
    const double diff = direct[i] - state.gram_inv_data()[i];
    num += diff * diff;
    den += direct[i] * direct[i];
  }
  const double rel = std::sqrt(num / den);
  if (rel > 1e-8) {
    return "relative Frobenius error " + std::to_string(rel);
  }
  return "";
}

std::string linalg_monotonicity() {
  const int d = 6;
  Rng rng(12);
  linalg::GramState state(d, 1.0);
  std::vector<std::vector<double>> probes;
  for (int i = 0; i < 16; ++i) probes.push_back(random_unit_ball(d, rng));
  for (int t = 0; t < 200; ++t) {
    std::vector<double> before(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) {
      before[i] = state.quad_form(probes[i]);
    }
    state.rank_one_update(random_unit_ball(d, rng));
    for (std::size_t i = 0; i < probes.size(); ++i) {
      if (state.quad_form(probes[i]) > before[i] + 1e-12) {
        return "quad_form increased after an update";
      }
    }
  }
  return "";
}

std::string linalg_elliptical_potential() {
  const int d = 8;
  const int k_max = 5000;
  Rng rng(13);
  linalg::GramState state(d, 1.0);
  double sum = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    const std::vector<double> phi = random_unit_ball(d, rng);
    sum += state.quad_form(phi);
    state.rank_one_update(phi);
    const double budget = 2.0 * d * std::log((1.0 + k) / 1.0);
    if (sum > budget + 1e-9) {
      return "sum " + std::to_string(sum) + " exceeds budget " +
             std::to_string(budget) + " at k=" + std::to_string(k);
    }
  }
  return "";
}

std::string linalg_symmetry() {
  const int d = 10;
  Rng rng(14);
  linalg::GramState state(d, 0.5);
  for (int t = 0; t < 500; ++t) {
    state.rank_one_update(random_unit_ball(d, rng));
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        if (std::abs(state.gram(i, j) - state.gram(j, i)) > 1e-12 ||
            std::abs(state.gram_inv(i, j) - state.gram_inv(j, i)) > 1e-12) {
          return "asymmetry after update " + std::to_string(t + 1);
        }
      }
    }
  }
  return "";
}

std::string policy_simplex() {
  Rng rng(15);
  const double alphas[] = {0.0, 0.3, 2.0, 50.0,
                           std::numeric_limits<double>::infinity()};
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + static_cast<int>(rng.next_uniform() * 8);
    std::vector<double> v(n);
    for (double& x : v) x = 20.0 * rng.next_uniform() - 10.0;
    for (double alpha : alphas) {
      const policy::ActionDistribution dist = policy::soft_max(v, alpha);
      double sum = 0.0;
      for (double p : dist.probs) {
        if (p < 0.0) return "negative probability";
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) return "probabilities do not sum to 1";
    }
  }
  return "";
}

std::string policy_lipschitz() {
  Rng rng(16);
  const double alphas[] = {0.1, 1.0, 10.0};
  for (int t = 0; t < 10000; ++t) {
    const int n = 2 + static_cast<int>(rng.next_uniform() * 7);
    std::vector<double> x(n), y(n);
    double linf = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = 4.0 * rng.next_uniform() - 2.0;
      y[i] = x[i] + 0.5 * (2.0 * rng.next_uniform() - 1.0);
      linf = std::max(linf, std::abs(x[i] - y[i]));
    }
    for (double alpha : alphas) {
      const policy::ActionDistribution px = policy::soft_max(x, alpha);
      const policy::ActionDistribution py = policy::soft_max(y, alpha);
      double l1 = 0.0;
      for (int i = 0; i < n; ++i) l1 += std::abs(px.probs[i] - py.probs[i]);
      if (l1 > 2.0 * alpha * linf + 1e-12) {
        return "||sm(x)-sm(y)||_1 = " + std::to_string(l1) +
               " exceeds 2*alpha*||x-y||_inf = " +
               std::to_string(2.0 * alpha * linf);
      }
    }
  }
  return "";
}

std::string policy_logsumexp_gap() {
  Rng rng(17);
  const double alphas[] = {0.1, 1.0, 10.0};
  for (int t = 0; t < 10000; ++t) {
    const int n = 1 + static_cast<int>(rng.next_uniform() * 8);
    std::vector<double> x(n);
    for (double& v : x) v = 6.0 * rng.next_uniform() - 3.0;
    double best = x[0];
    for (double v : x) best = std::max(best, v);
    for (double alpha : alphas) {
      const double value =
          policy::expected_value(policy::soft_max(x, alpha), x);
      if (best - value > std::log(static_cast<double>(n)) / alpha + 1e-12) {
        return "gap exceeds log(n)/alpha";
      }
    }
  }
  return "";
}

std::string policy_monotone_concentration() {
  Rng rng(18);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + static_cast<int>(rng.next_uniform() * 6);
    std::vector<double> x(n);
    for (double& v : x) v = 4.0 * rng.next_uniform() - 2.0;
    x[t % n] += 0.5;  // make the argmax unique
    int best = 0;
    for (int i = 1; i < n; ++i) {
      if (x[i] > x[best]) best = i;
    }
    double prev = 0.0;
    for (double alpha : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      const double p = policy::soft_max(x, alpha).probs[best];
      if (p < prev - 1e-12) return "argmax probability decreased in alpha";
      prev = p;
    }
  }
  return "";
}

std::string env_generated_validity() {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const env::GameShape shape{3, 2, 2, 3, 4};
    const env::LinearMdpModel model = env::random_linear_mdp(shape, seed);
    for (int h = 0; h < shape.horizon; ++h) {
      for (int x = 0; x < shape.num_states; ++x) {
        for (int a = 0; a < shape.num_leader_actions; ++a) {
          for (int b = 0; b < shape.num_follower_actions; ++b) {
            const std::vector<double> p = model.transition_distribution(h, x, a, b);
            double sum = 0.0;
            for (double v : p) {
              if (v < 0.0) return "negative transition probability";
              sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9) return "transition row sum off";
            if (std::abs(model.reward(Player::leader, h, x, a, b)) > 1.0 ||
                std::abs(model.reward(Player::follower, h, x, a, b)) > 1.0) {
              return "reward outside [-1, 1]";
            }
          }
        }
      }
    }
  }
  return "";
}

std::string env_tabular_roundtrip() {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const env::GameShape shape{3, 2, 2, 2, 0};
    const env::TabularGame game = env::random_tabular_game(shape, seed);
    const env::LinearMdpModel model = env::tabular_to_linear(game);
    const int triples = model.shape().num_triples();
    for (int h = 0; h < shape.horizon; ++h) {
      for (int x = 0; x < shape.num_states; ++x) {
        for (int a = 0; a < shape.num_leader_actions; ++a) {
          for (int b = 0; b < shape.num_follower_actions; ++b) {
            const int t = model.shape().triple_index(x, a, b);
            const std::vector<double> p = model.transition_distribution(h, x, a, b);
            for (int y = 0; y < shape.num_states; ++y) {
              const double expected =
                  game.transitions[(static_cast<std::size_t>(h) * triples + t) *
                                       shape.num_states +
                                   y];
              if (std::abs(p[y] - expected) > 1e-15) return "transition drift";
            }
            if (std::abs(model.reward(Player::leader, h, x, a, b) -
                         game.rewards_leader[static_cast<std::size_t>(h) * triples +
                                             t]) > 1e-15) {
              return "reward drift";
            }
          }
        }
      }
    }
  }
  return "";
}

std::string oracle_bellman_consistency() {
  const env::GameShape shape{2, 2, 2, 3, 0};
  const env::LinearMdpModel model =
      env::tabular_to_linear(env::random_tabular_game(shape, 21));
  Rng rng(22);
  oracle::PolicyTable table = oracle::PolicyTable::uniform(model.shape());
  for (auto& row : table.leader) {
    std::vector<double> v(row.probs.size());
    for (double& x : v) x = rng.next_uniform();
    row = policy::soft_max(v, 1.0);
  }
  for (auto& row : table.follower) {
    std::vector<double> v(row.probs.size());
    for (double& x : v) x = rng.next_uniform();
    row = policy::soft_max(v, 1.0);
  }
  const oracle::ValueTables vt = oracle::evaluate_joint(model, table);
  for (int h = 0; h < shape.horizon; ++h) {
    for (int x = 0; x < shape.num_states; ++x) {
      for (int a = 0; a < shape.num_leader_actions; ++a) {
        for (int b = 0; b < shape.num_follower_actions; ++b) {
          for (Player m : {Player::leader, Player::follower}) {
            double expected = model.reward(m, h, x, a, b);
            if (h + 1 < shape.horizon) {
              const std::vector<double> p = model.transition_distribution(h, x, a, b);
              for (int y = 0; y < shape.num_states; ++y) {
                expected += p[y] * vt.v(m, h + 1, y);
              }
            }
            if (std::abs(vt.q(m, h, x, a, b) - expected) > 1e-12) {
              return "Bellman residual above 1e-12";
            }
          }
        }
      }
    }
  }
  return "";
}

std::string oracle_bruteforce_equivalence() {
  for (std::uint64_t seed = 31; seed < 41; ++seed) {
    const env::GameShape shape{2, 2, 2, 2, 0};
    const env::LinearMdpModel model =
        env::tabular_to_linear(env::random_tabular_game(shape, seed));
    const auto [table, values] = oracle::stackelberg_solve(model);
    const oracle::ValueTables brute = oracle::brute_force_enumerate(model);
    const int x1 = model.initial_state();
    if (std::abs(values.v(Player::leader, 0, x1) -
                 brute.v(Player::leader, 0, x1)) > 1e-9) {
      return "leader value mismatch at seed " + std::to_string(seed);
    }
  }
  return "";
}

std::string oracle_best_response_dominance() {
  const env::GameShape shape{2, 2, 2, 3, 0};
  const env::LinearMdpModel model =
      env::tabular_to_linear(env::random_tabular_game(shape, 41));
  Rng rng(42);
  const auto random_table = [&]() {
    oracle::PolicyTable table = oracle::PolicyTable::uniform(model.shape());
    for (auto& row : table.leader) {
      std::vector<double> v(row.probs.size());
      for (double& x : v) x = rng.next_uniform();
      row = policy::soft_max(v, 2.0);
    }
    for (auto& row : table.follower) {
      std::vector<double> v(row.probs.size());
      for (double& x : v) x = rng.next_uniform();
      row = policy::soft_max(v, 2.0);
    }
    return table;
  };

  const oracle::PolicyTable opponent = random_table();
  const oracle::LeaderBestResponse leader_br =
      oracle::best_response_leader(model, opponent);
  const oracle::FollowerBestResponse follower_br =
      oracle::best_response_follower(model, opponent);
  const int x1 = model.initial_state();
  for (int trial = 0; trial < 100; ++trial) {
    oracle::PolicyTable candidate = random_table();
    // Leader dominance: any leader policy against the fixed follower rows.
    oracle::PolicyTable mixed = opponent;
    mixed.leader = candidate.leader;
    const oracle::ValueTables joint = oracle::evaluate_joint(model, mixed);
    if (joint.v(Player::leader, 0, x1) > leader_br.value + 1e-9) {
      return "leader best response dominated by a random policy";
    }
    // Follower dominance per first leader action.
    oracle::PolicyTable mixed_f = opponent;
    mixed_f.follower = candidate.follower;
    const oracle::ValueTables joint_f = oracle::evaluate_joint(model, mixed_f);
    for (int a = 0; a < shape.num_leader_actions; ++a) {
      if (joint_f.bar_v_f(0, x1, a) >
          follower_br.value_by_first_action[a] + 1e-9) {
        return "follower best response dominated by a random policy";
      }
    }
  }
  return "";
}

harness::ExperimentConfig short_reference_config() {
  harness::ExperimentConfig config;
  config.model_kind = "tabular";
  config.shape = env::GameShape{2, 2, 2, 3, 0};
  config.shape.feature_dim = config.shape.num_triples();
  config.model_seed = 7;
  config.episodes = 60;
  config.cadence = 1;
  config.master_seed = 5;
  config.c1 = 0.02;
  return config;
}

std::string learner_weight_norm() {
  const harness::ExperimentConfig config = short_reference_config();
  const env::LinearMdpModel model = harness::resolve_model(config);
  std::string failure;
  harness::run_experiment(config, model,
                          [&](const learner::Learner& learner, long k) {
    const learner::HyperParams& params = learner.params();
    const double bound =
        2.0 * params.horizon *
        std::sqrt(model.feature_dim() * static_cast<double>(k) / params.lambda);
    for (int h = 0; h < params.horizon; ++h) {
      for (Player m : {Player::leader, Player::follower}) {
        double norm_sq = 0.0;
        for (double w : learner.weights(m, h)) norm_sq += w * w;
        if (std::sqrt(norm_sq) > bound + 1e-9) {
          failure = "||w|| exceeds 2H sqrt(dk/lambda) at k=" + std::to_string(k);
        }
      }
    }
  });
  return failure;
}

std::string learner_q_clipping() {
  const harness::ExperimentConfig config = short_reference_config();
  const env::LinearMdpModel model = harness::resolve_model(config);
  const env::GameShape& shape = model.shape();
  std::string failure;
  harness::run_experiment(config, model,
                          [&](const learner::Learner& learner, long) {
    for (int h = 0; h < shape.horizon && failure.empty(); ++h) {
      for (int x = 0; x < shape.num_states; ++x) {
        for (int a = 0; a < shape.num_leader_actions; ++a) {
          for (Player m : {Player::leader, Player::follower}) {
            for (double q : learner.q_values(m, h, x, a)) {
              if (q > shape.horizon + 1e-12) failure = "Q exceeds H";
            }
          }
        }
        for (Player m : {Player::leader, Player::follower}) {
          if (learner.value_at(m, h, x) > shape.horizon + 1e-12) {
            failure = "value exceeds H";
          }
          if (learner.value_at(m, shape.horizon, x) != 0.0) {
            failure = "terminal value not 0";
          }
        }
      }
    }
  });
  return failure;
}

std::string learner_softmax_gap() {
  // run_experiment checks the realized soft-max gap bounds every evaluated
  // episode and throws on violation.
  const harness::ExperimentConfig config = short_reference_config();
  harness::run_experiment(config);
  return "";
}

std::string harness_regret_dominance() {
  // run_experiment throws if an increment drops below -1e-9.
  harness::ExperimentConfig config = short_reference_config();
  config.episodes = 40;
  const auto records = harness::run_experiment(config);
  if (records.size() != 40) return "record count mismatch";
  return "";
}

std::string harness_determinism() {
  const harness::ExperimentConfig config = short_reference_config();
  const std::string first = harness::csv_string(harness::run_experiment(config));
  const std::string second = harness::csv_string(harness::run_experiment(config));
  if (first != second) return "identical configs produced different CSV bytes";
  return "";
}

}  // namespace

std::vector<PropertyResult> run_all() {
  const std::vector<Check> checks = {
      {"linalg.sherman_morrison_consistency", linalg_sherman_morrison},
      {"linalg.quad_form_monotonicity", linalg_monotonicity},
      {"linalg.elliptical_potential", linalg_elliptical_potential},
      {"linalg.symmetry", linalg_symmetry},
      {"policy.simplex_validity", policy_simplex},
      {"policy.softmax_lipschitz", policy_lipschitz},
      {"policy.logsumexp_gap", policy_logsumexp_gap},
      {"policy.monotone_concentration", policy_monotone_concentration},
      {"env.generated_model_validity", env_generated_validity},
      {"env.tabular_roundtrip", env_tabular_roundtrip},
      {"oracle.bellman_consistency", oracle_bellman_consistency},
      {"oracle.bruteforce_equivalence", oracle_bruteforce_equivalence},
      {"oracle.best_response_dominance", oracle_best_response_dominance},
      {"learner.weight_norm_bound", learner_weight_norm},
      {"learner.q_value_clipping", learner_q_clipping},
      {"learner.softmax_gap_bounds", learner_softmax_gap},
      {"harness.regret_dominance", harness_regret_dominance},
      {"harness.determinism", harness_determinism},
  };

  std::vector<PropertyResult> results;
  results.reserve(checks.size());
  for (const Check& check : checks) {
    PropertyResult result;
    result.name = check.name;
    try {
      result.detail = check.body();
      result.passed = result.detail.empty();
    } catch (const std::exception& e) {
      result.passed = false;
      result.detail = e.what();
    }
    results.push_back(std::move(result));
  }
  return results;
}

bool report(const std::vector<PropertyResult>& results, std::ostream& out) {
  bool all_passed = true;
  for (const PropertyResult& result : results) {
    out << (result.passed ? "[PASS] " : "[FAIL] ") << result.name;
    if (!result.detail.empty()) out << ": " << result.detail;
    out << '\n';
    all_passed = all_passed && result.passed;
  }
  out << (all_passed ? "all properties passed\n" : "some properties FAILED\n");
  return all_passed;
}

}  // namespace stackgame::validate
