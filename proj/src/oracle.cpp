#include "stackgame/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stackgame::oracle {

namespace {

// P_h V at (x,a,b) for a value vector over states.
double expected_next(const env::LinearMdpModel& model, int h, int x, int a,
                     int b, const std::vector<double>& v_next) {
  const std::vector<double> p = model.transition_distribution(h, x, a, b);
  double acc = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) acc += p[y] * v_next[y];
  return acc;
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

policy::ActionDistribution point_mass(int n, int index) {
  policy::ActionDistribution dist;
  dist.probs.assign(n, 0.0);
  dist.probs[index] = 1.0;
  return dist;
}

ValueTables make_tables(const env::GameShape& shape) {
  ValueTables vt;
  vt.horizon = shape.horizon;
  vt.num_states = shape.num_states;
  vt.num_leader_actions = shape.num_leader_actions;
  vt.num_follower_actions = shape.num_follower_actions;
  const std::size_t hs = static_cast<std::size_t>(shape.horizon) * shape.num_states;
  vt.q_leader.assign(hs * shape.num_leader_actions * shape.num_follower_actions, 0.0);
  vt.q_follower.assign(hs * shape.num_leader_actions * shape.num_follower_actions, 0.0);
  vt.marginal_q.assign(hs * shape.num_leader_actions, 0.0);
  vt.follower_bar_v.assign(hs * shape.num_leader_actions, 0.0);
  vt.v_leader.assign(hs, 0.0);
  vt.v_follower.assign(hs, 0.0);
  return vt;
}

}  // namespace

PolicyTable PolicyTable::uniform(const env::GameShape& shape) {
  PolicyTable table;
  table.horizon = shape.horizon;
  table.num_states = shape.num_states;
  table.num_leader_actions = shape.num_leader_actions;
  table.num_follower_actions = shape.num_follower_actions;
  policy::ActionDistribution lrow;
  lrow.probs.assign(shape.num_leader_actions, 1.0 / shape.num_leader_actions);
  policy::ActionDistribution frow;
  frow.probs.assign(shape.num_follower_actions, 1.0 / shape.num_follower_actions);
  table.leader.assign(static_cast<std::size_t>(shape.horizon) * shape.num_states,
                      lrow);
  table.follower.assign(static_cast<std::size_t>(shape.horizon) *
                            shape.num_states * shape.num_leader_actions,
                        frow);
  return table;
}

bool PolicyTable::matches(const env::GameShape& shape) const {
  if (horizon != shape.horizon || num_states != shape.num_states ||
      num_leader_actions != shape.num_leader_actions ||
      num_follower_actions != shape.num_follower_actions ||
      leader.size() != static_cast<std::size_t>(horizon) * num_states ||
      follower.size() != static_cast<std::size_t>(horizon) * num_states *
                             num_leader_actions) {
    return false;
  }
  for (const auto& row : leader) {
    if (row.support_size() != num_leader_actions) return false;
  }
  for (const auto& row : follower) {
    if (row.support_size() != num_follower_actions) return false;
  }
  return true;
}

ValueTables evaluate_joint(const env::LinearMdpModel& model,
                           const PolicyTable& policy_table) {
  const env::GameShape& shape = model.shape();
  if (!policy_table.matches(shape)) {
    throw std::invalid_argument("evaluate_joint: policy/model shape mismatch");
  }
  ValueTables vt = make_tables(shape);

  std::vector<double> v_l_next(shape.num_states, 0.0);
  std::vector<double> v_f_next(shape.num_states, 0.0);
  for (int h = shape.horizon - 1; h >= 0; --h) {
    std::vector<double> v_l_cur(shape.num_states, 0.0);
    std::vector<double> v_f_cur(shape.num_states, 0.0);
    for (int x = 0; x < shape.num_states; ++x) {
      double state_l = 0.0, state_f = 0.0;
      const policy::ActionDistribution& pi_l = policy_table.leader_at(h, x);
      for (int a = 0; a < shape.num_leader_actions; ++a) {
        const policy::ActionDistribution& pi_f =
            policy_table.follower_at(h, x, a);
        double ql = 0.0, vbar = 0.0;
        for (int b = 0; b < shape.num_follower_actions; ++b) {
          const double q_l_entry =
              model.reward(Player::leader, h, x, a, b) +
              expected_next(model, h, x, a, b, v_l_next);
          const double q_f_entry =
              model.reward(Player::follower, h, x, a, b) +
              expected_next(model, h, x, a, b, v_f_next);
          const std::size_t idx =
              ((static_cast<std::size_t>(h) * shape.num_states + x) *
                   shape.num_leader_actions +
               a) *
                  shape.num_follower_actions +
              b;
          vt.q_leader[idx] = q_l_entry;
          vt.q_follower[idx] = q_f_entry;
          ql += pi_f.probs[b] * q_l_entry;
          vbar += pi_f.probs[b] * q_f_entry;
        }
        const std::size_t aidx =
            (static_cast<std::size_t>(h) * shape.num_states + x) *
                shape.num_leader_actions +
            a;
        vt.marginal_q[aidx] = ql;
        vt.follower_bar_v[aidx] = vbar;
        state_l += pi_l.probs[a] * ql;
        state_f += pi_l.probs[a] * vbar;
      }
      const std::size_t sidx = static_cast<std::size_t>(h) * shape.num_states + x;
      vt.v_leader[sidx] = state_l;
      vt.v_follower[sidx] = state_f;
      v_l_cur[x] = state_l;
      v_f_cur[x] = state_f;
    }
    v_l_next = std::move(v_l_cur);
    v_f_next = std::move(v_f_cur);
  }
  return vt;
}

std::pair<PolicyTable, ValueTables> stackelberg_solve(
    const env::LinearMdpModel& model) {
  const env::GameShape& shape = model.shape();
  PolicyTable table = PolicyTable::uniform(shape);
  ValueTables vt = make_tables(shape);

  std::vector<double> v_l_next(shape.num_states, 0.0);
  std::vector<double> v_f_next(shape.num_states, 0.0);
  for (int h = shape.horizon - 1; h >= 0; --h) {
    std::vector<double> v_l_cur(shape.num_states, 0.0);
    std::vector<double> v_f_cur(shape.num_states, 0.0);
    for (int x = 0; x < shape.num_states; ++x) {
      std::vector<double> ql(shape.num_leader_actions, 0.0);
      std::vector<double> vbar(shape.num_leader_actions, 0.0);
      for (int a = 0; a < shape.num_leader_actions; ++a) {
        std::vector<double> q_f_row(shape.num_follower_actions, 0.0);
        std::vector<double> q_l_row(shape.num_follower_actions, 0.0);
        for (int b = 0; b < shape.num_follower_actions; ++b) {
          q_l_row[b] = model.reward(Player::leader, h, x, a, b) +
                       expected_next(model, h, x, a, b, v_l_next);
          q_f_row[b] = model.reward(Player::follower, h, x, a, b) +
                       expected_next(model, h, x, a, b, v_f_next);
          const std::size_t idx =
              ((static_cast<std::size_t>(h) * shape.num_states + x) *
                   shape.num_leader_actions +
               a) *
                  shape.num_follower_actions +
              b;
          vt.q_leader[idx] = q_l_row[b];
          vt.q_follower[idx] = q_f_row[b];
        }
        const int b_star = argmax_lowest(q_f_row);
        table.follower_at(h, x, a) =
            point_mass(shape.num_follower_actions, b_star);
        ql[a] = q_l_row[b_star];
        vbar[a] = q_f_row[b_star];
        const std::size_t aidx =
            (static_cast<std::size_t>(h) * shape.num_states + x) *
                shape.num_leader_actions +
            a;
        vt.marginal_q[aidx] = ql[a];
        vt.follower_bar_v[aidx] = vbar[a];
      }
      const int a_star = argmax_lowest(ql);
      table.leader_at(h, x) = point_mass(shape.num_leader_actions, a_star);
      const std::size_t sidx = static_cast<std::size_t>(h) * shape.num_states + x;
      vt.v_leader[sidx] = ql[a_star];
      vt.v_follower[sidx] = vbar[a_star];
      v_l_cur[x] = ql[a_star];
      v_f_cur[x] = vbar[a_star];
    }
    v_l_next = std::move(v_l_cur);
    v_f_next = std::move(v_f_cur);
  }
  return {std::move(table), std::move(vt)};
}

LeaderBestResponse best_response_leader(const env::LinearMdpModel& model,
                                        const PolicyTable& opponent) {
  const env::GameShape& shape = model.shape();
  if (!opponent.matches(shape)) {
    throw std::invalid_argument("best_response_leader: shape mismatch");
  }
  LeaderBestResponse response;
  response.leader.assign(
      static_cast<std::size_t>(shape.horizon) * shape.num_states,
      policy::ActionDistribution{});

  std::vector<double> v_next(shape.num_states, 0.0);
  for (int h = shape.horizon - 1; h >= 0; --h) {
    std::vector<double> v_cur(shape.num_states, 0.0);
    for (int x = 0; x < shape.num_states; ++x) {
      std::vector<double> ql(shape.num_leader_actions, 0.0);
      for (int a = 0; a < shape.num_leader_actions; ++a) {
        const policy::ActionDistribution& pi_f = opponent.follower_at(h, x, a);
        double acc = 0.0;
        for (int b = 0; b < shape.num_follower_actions; ++b) {
          acc += pi_f.probs[b] * (model.reward(Player::leader, h, x, a, b) +
                                  expected_next(model, h, x, a, b, v_next));
        }
        ql[a] = acc;
      }
      const int a_star = argmax_lowest(ql);
      response.leader[static_cast<std::size_t>(h) * shape.num_states + x] =
          point_mass(shape.num_leader_actions, a_star);
      v_cur[x] = ql[a_star];
    }
    v_next = std::move(v_cur);
  }
  response.value = v_next[model.initial_state()];
  return response;
}

FollowerBestResponse best_response_follower(const env::LinearMdpModel& model,
                                            const PolicyTable& opponent) {
  const env::GameShape& shape = model.shape();
  if (!opponent.matches(shape)) {
    throw std::invalid_argument("best_response_follower: shape mismatch");
  }
  FollowerBestResponse response;
  response.follower.assign(static_cast<std::size_t>(shape.horizon) *
                               shape.num_states * shape.num_leader_actions,
                           policy::ActionDistribution{});

  std::vector<double> v_next(shape.num_states, 0.0);
  std::vector<double> first_step_bar;
  for (int h = shape.horizon - 1; h >= 0; --h) {
    std::vector<double> v_cur(shape.num_states, 0.0);
    for (int x = 0; x < shape.num_states; ++x) {
      std::vector<double> vbar(shape.num_leader_actions, 0.0);
      for (int a = 0; a < shape.num_leader_actions; ++a) {
        std::vector<double> q_f_row(shape.num_follower_actions, 0.0);
        for (int b = 0; b < shape.num_follower_actions; ++b) {
          q_f_row[b] = model.reward(Player::follower, h, x, a, b) +
                       expected_next(model, h, x, a, b, v_next);
        }
        const int b_star = argmax_lowest(q_f_row);
        response.follower[(static_cast<std::size_t>(h) * shape.num_states + x) *
                              shape.num_leader_actions +
                          a] = point_mass(shape.num_follower_actions, b_star);
        vbar[a] = q_f_row[b_star];
      }
      // Leader actions at steps after the first are drawn from the fixed
      // leader policy; the first step stays conditioned on the leader action.
      const policy::ActionDistribution& pi_l = opponent.leader_at(h, x);
      double state_value = 0.0;
      for (int a = 0; a < shape.num_leader_actions; ++a) {
        state_value += pi_l.probs[a] * vbar[a];
      }
      v_cur[x] = state_value;
      if (h == 0 && x == model.initial_state()) first_step_bar = vbar;
    }
    v_next = std::move(v_cur);
  }
  response.value_by_first_action = std::move(first_step_bar);
  return response;
}

ValueTables brute_force_enumerate(const env::LinearMdpModel& model) {
  const env::GameShape& shape = model.shape();
  const int leader_slots = shape.horizon * shape.num_states;
  const int follower_slots = leader_slots * shape.num_leader_actions;

  double combos = 1.0;
  for (int i = 0; i < leader_slots; ++i) combos *= shape.num_leader_actions;
  for (int i = 0; i < follower_slots; ++i) combos *= shape.num_follower_actions;
  if (combos > 1e6) {
    throw std::runtime_error("brute_force_enumerate: instance too large (" +
                             std::to_string(combos) + " policy pairs)");
  }

  std::vector<int> leader_map(leader_slots, 0);
  std::vector<int> follower_map(follower_slots, 0);
  PolicyTable table = PolicyTable::uniform(shape);

  const double tol = 1e-12;
  auto greedy_consistent = [&](const ValueTables& vt) {
    for (int h = 0; h < shape.horizon; ++h) {
      for (int x = 0; x < shape.num_states; ++x) {
        for (int a = 0; a < shape.num_leader_actions; ++a) {
          const int b_pick = follower_map[(h * shape.num_states + x) *
                                              shape.num_leader_actions +
                                          a];
          double best = -std::numeric_limits<double>::infinity();
          for (int b = 0; b < shape.num_follower_actions; ++b) {
            best = std::max(best, vt.q(Player::follower, h, x, a, b));
          }
          if (vt.q(Player::follower, h, x, a, b_pick) < best - tol) return false;
        }
        const int a_pick = leader_map[h * shape.num_states + x];
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < shape.num_leader_actions; ++a) {
          best = std::max(best, vt.q_l(h, x, a));
        }
        if (vt.q_l(h, x, a_pick) < best - tol) return false;
      }
    }
    return true;
  };

  auto advance = [](std::vector<int>& digits, int base) {
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (++digits[i] < base) return true;
      digits[i] = 0;
    }
    return false;
  };

  do {
    for (int i = 0; i < leader_slots; ++i) {
      table.leader[i] = point_mass(shape.num_leader_actions, leader_map[i]);
    }
    std::fill(follower_map.begin(), follower_map.end(), 0);
    do {
      for (int i = 0; i < follower_slots; ++i) {
        table.follower[i] =
            point_mass(shape.num_follower_actions, follower_map[i]);
      }
      ValueTables vt = evaluate_joint(model, table);
      if (greedy_consistent(vt)) return vt;
    } while (advance(follower_map, shape.num_follower_actions));
  } while (advance(leader_map, shape.num_leader_actions));

  throw std::runtime_error(
      "brute_force_enumerate: no greedy-consistent policy pair found");
}

PolicyTable materialize_learner_policy(const learner::Learner& learner,
                                       const env::LinearMdpModel& model) {
  const env::GameShape& shape = model.shape();
  PolicyTable table = PolicyTable::uniform(shape);
  for (int h = 0; h < shape.horizon; ++h) {
    for (int x = 0; x < shape.num_states; ++x) {
      table.leader_at(h, x) = learner.leader_policy(h, x);
      for (int a = 0; a < shape.num_leader_actions; ++a) {
        table.follower_at(h, x, a) = learner.follower_policy(h, x, a);
      }
    }
  }
  return table;
}

}  // namespace stackgame::oracle
