#pragma once

#include <utility>
#include <vector>

#include "stackgame/env.hpp"
#include "stackgame/learner.hpp"
#include "stackgame/policy.hpp"

namespace stackgame::oracle {

// Materialized per-episode stochastic policies over a finite model:
// leader rows per (h, x), follower rows per (h, x, a).
struct PolicyTable {
  int horizon = 0;
  int num_states = 0;
  int num_leader_actions = 0;
  int num_follower_actions = 0;
  std::vector<policy::ActionDistribution> leader;    // [h*S + x]
  std::vector<policy::ActionDistribution> follower;  // [(h*S + x)*A + a]

  static PolicyTable uniform(const env::GameShape& shape);

  const policy::ActionDistribution& leader_at(int h, int x) const {
    return leader[static_cast<std::size_t>(h) * num_states + x];
  }
  policy::ActionDistribution& leader_at(int h, int x) {
    return leader[static_cast<std::size_t>(h) * num_states + x];
  }
  const policy::ActionDistribution& follower_at(int h, int x, int a) const {
    return follower[(static_cast<std::size_t>(h) * num_states + x) *
                        num_leader_actions +
                    a];
  }
  policy::ActionDistribution& follower_at(int h, int x, int a) {
    return follower[(static_cast<std::size_t>(h) * num_states + x) *
                        num_leader_actions +
                    a];
  }
  bool matches(const env::GameShape& shape) const;
};

// Exact value tables from a backward recursion.
struct ValueTables {
  int horizon = 0;
  int num_states = 0;
  int num_leader_actions = 0;
  int num_follower_actions = 0;
  std::vector<double> q_leader;         // [h][x][a][b]
  std::vector<double> q_follower;       // [h][x][a][b]
  std::vector<double> marginal_q;       // [h][x][a]   leader's q_l
  std::vector<double> follower_bar_v;   // [h][x][a]   leader-action value
  std::vector<double> v_leader;         // [h][x]
  std::vector<double> v_follower;       // [h][x]

  double q(Player m, int h, int x, int a, int b) const {
    const std::vector<double>& t =
        (m == Player::leader) ? q_leader : q_follower;
    return t[((static_cast<std::size_t>(h) * num_states + x) *
                  num_leader_actions +
              a) *
                 num_follower_actions +
             b];
  }
  double q_l(int h, int x, int a) const {
    return marginal_q[(static_cast<std::size_t>(h) * num_states + x) *
                          num_leader_actions +
                      a];
  }
  double bar_v_f(int h, int x, int a) const {
    return follower_bar_v[(static_cast<std::size_t>(h) * num_states + x) *
                              num_leader_actions +
                          a];
  }
  double v(Player m, int h, int x) const {
    const std::vector<double>& t =
        (m == Player::leader) ? v_leader : v_follower;
    return t[static_cast<std::size_t>(h) * num_states + x];
  }
};

// Backward policy evaluation: Q_{m,h} = r_m + P_h V_{m,h+1} with V_{m,H+1} =
// 0, marginals and state values taken under the given stochastic policies.
ValueTables evaluate_joint(const env::LinearMdpModel& model,
                           const PolicyTable& policy);

// Backward induction with greedy (point-mass) policies: the follower best
// responds to the joint Q at each step, the leader is greedy with respect to
// its marginal q. Ties break to the lowest index.
std::pair<PolicyTable, ValueTables> stackelberg_solve(
    const env::LinearMdpModel& model);

struct LeaderBestResponse {
  std::vector<policy::ActionDistribution> leader;  // [h*S + x]
  double value = 0.0;  // V_{l,1}(x1) against the fixed follower policy
};

// Exact best response of the leader against the fixed follower policy of
// `opponent` (its leader rows are ignored).
LeaderBestResponse best_response_leader(const env::LinearMdpModel& model,
                                        const PolicyTable& opponent);

struct FollowerBestResponse {
  std::vector<policy::ActionDistribution> follower;  // [(h*S + x)*A + a]
  // V-bar_{f,1}(x1, a) per first leader action; later leader actions are
  // marginalized under the fixed leader policy.
  std::vector<double> value_by_first_action;
};

// Exact best response of the follower against the fixed leader policy of
// `opponent` (its follower rows are ignored).
FollowerBestResponse best_response_follower(const env::LinearMdpModel& model,
                                            const PolicyTable& opponent);

// Exhaustive cross-check of stackelberg_solve: enumerates every joint
// deterministic policy pair, evaluates it with evaluate_joint, and returns
// the tables of the pair satisfying the stage-wise greedy conditions (the
// follower's action maximizes its own joint Q at every (h,x,a); the leader's
// action maximizes the marginal q at every (h,x)). Guarded by
// |A|^(H|S|) * |B|^(H|S||A|) <= 10^6; throws when the instance is too large.
ValueTables brute_force_enumerate(const env::LinearMdpModel& model);

// Tabulates the learner's episode policies for oracle evaluation.
PolicyTable materialize_learner_policy(const learner::Learner& learner,
                                       const env::LinearMdpModel& model);

}  // namespace stackgame::oracle
