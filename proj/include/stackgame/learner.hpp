#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "stackgame/env.hpp"
#include "stackgame/linalg.hpp"
#include "stackgame/policy.hpp"
#include "stackgame/rng.hpp"

namespace stackgame::learner {

// Episode-indexed parameters for the two soft-max LSVI-UCB learners.
struct HyperParams {
  double beta = 0.0;      // UCB bonus coefficient
  double c1 = 1.0;        // constant in beta = c1 * d * H * sqrt(iota)
  double alpha_l = 0.0;   // leader soft-max inverse temperature (may be +inf)
  double alpha_f = 0.0;   // follower soft-max inverse temperature
  double lambda = 1.0;    // ridge regularizer
  double failure_prob = 0.1;
  int horizon = 0;
  long episodes = 0;

  void validate() const;  // throws std::invalid_argument
};

// beta = c1*d*H*sqrt(iota) with iota = log((log|A||B| + 2 log|A| log|B|) *
// 4dT/p), T = K*H; alpha_l = log|A| sqrt(K)/H, alpha_f = log|B| sqrt(K)/H;
// lambda = 1. A degenerate log factor (|A| = 1 or |B| = 1) is replaced by 1.
HyperParams default_hyperparams(const env::GameShape& shape, long episodes,
                                double failure_prob, double c1);

// One observed step under bandit feedback: both players see both rewards.
struct TransitionRecord {
  int h = 0;       // 0-based step
  int x = 0;
  int a = 0;
  int b = 0;
  double r_l = 0.0;
  double r_f = 0.0;
  int x_next = 0;
};

// Joint learner state for the leader and the follower. Both players run the
// same backward least-squares value iteration with a shared replay buffer, so
// one object serves both; only action execution differs (the follower's draw
// conditions on the leader's realized action).
//
// Single-writer value; distinct experiments use distinct instances.
class Learner {
 public:
  Learner(const env::FeatureOracle& features, HyperParams params);

  // Backward pass for episode k (1-based): absorbs newly recorded
  // transitions into the per-step Gram matrices and recomputes the weight
  // vectors h = H..1 with targets r + V_{h+1} evaluated under the weights
  // already updated this episode. Episode 1 plans from an empty buffer.
  void plan(long episode);

  // Q_m(x, a, .) over follower actions:
  // min(<w_m[h], phi> + beta * sqrt(phi^T Lambda_h^-1 phi), H).
  std::vector<double> q_values(Player m, int h, int x, int a) const;

  policy::ActionDistribution follower_policy(int h, int x, int a) const;
  std::vector<double> marginal_q(int h, int x) const;
  policy::ActionDistribution leader_policy(int h, int x) const;

  // State value at step h (0-based; h == horizon returns 0 exactly).
  double value_at(Player m, int h, int x) const;

  int act_leader(int h, int x, Rng& rng) const;
  int act_follower(int h, int x, int a, Rng& rng) const;

  // Appends to the step-h buffer; visible to the next plan() call only.
  void record_transition(const TransitionRecord& rec);

  const HyperParams& params() const noexcept { return params_; }
  long planned_episode() const noexcept { return planned_episode_; }
  std::span<const double> weights(Player m, int h) const;
  const linalg::GramState& gram(int h) const { return gram_.at(h); }
  std::size_t buffer_size(int h) const { return buffer_.at(h).size(); }

  // Elliptical potential bookkeeping: running sum of phi^T Lambda^-1 phi
  // evaluated just before each absorption, and its theoretical budget
  // 2d log((lambda + n)/lambda). plan() aborts if the sum ever exceeds the
  // budget (only enforced for lambda >= 1, the regime the bound covers).
  double bonus_sum(int h) const { return bonus_sum_.at(h); }
  double bonus_budget(int h) const;

  // Cross-checks the incremental Gram matrices against a from-scratch
  // rebuild after every plan() when enabled.
  void set_rebuild_check(bool enabled) { rebuild_check_ = enabled; }

  // Appends one checkpoint block (schema documented in the README).
  void write_checkpoint(std::ostream& out, long episode) const;

 private:
  double clipped_q(Player m, int h, std::span<const double> phi) const;
  void absorb_new_records();

  const env::FeatureOracle* features_;
  HyperParams params_;
  std::vector<linalg::GramState> gram_;             // per step
  std::vector<std::vector<double>> w_l_, w_f_;      // per step, d entries
  std::vector<std::vector<TransitionRecord>> buffer_;
  std::vector<std::size_t> absorbed_;               // buffer prefix in gram_
  std::vector<double> bonus_sum_;
  long planned_episode_ = 0;
  bool rebuild_check_ = false;
};

}  // namespace stackgame::learner
