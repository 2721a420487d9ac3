#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stackgame/rng.hpp"

namespace stackgame {

enum class Player { leader, follower };

}  // namespace stackgame

namespace stackgame::env {

// Finite problem dimensions. Steps are 0-based in code (h in [0, horizon)).
struct GameShape {
  int num_states = 0;
  int num_leader_actions = 0;
  int num_follower_actions = 0;
  int horizon = 0;
  int feature_dim = 0;

  int num_triples() const noexcept {
    return num_states * num_leader_actions * num_follower_actions;
  }
  int triple_index(int x, int a, int b) const noexcept {
    return (x * num_leader_actions + a) * num_follower_actions + b;
  }
  bool valid() const noexcept {
    return num_states >= 1 && num_leader_actions >= 1 &&
           num_follower_actions >= 1 && horizon >= 1 && feature_dim >= 1;
  }
};

// Known feature map phi(x,a,b) in R^d, stored as a dense table over triples.
// Construction enforces ||phi||_2 <= 1 for every triple.
class FeatureMap {
 public:
  FeatureMap(int num_states, int num_leader_actions, int num_follower_actions,
             int dim, std::vector<double> table);

  std::span<const double> at(int x, int a, int b) const;
  int dim() const noexcept { return dim_; }
  const std::vector<double>& table() const noexcept { return table_; }

 private:
  int num_states_, num_leader_actions_, num_follower_actions_, dim_;
  std::vector<double> table_;
};

// Feature access handle given to learners: a learner sees action counts and
// the feature map, never the transition kernel, rewards, or the state count.
struct FeatureOracle {
  virtual ~FeatureOracle() = default;
  virtual int feature_dim() const = 0;
  virtual int num_leader_actions() const = 0;
  virtual int num_follower_actions() const = 0;
  virtual std::span<const double> features(int x, int a, int b) const = 0;
};

// Ground-truth linear MDP: P_h(x'|x,a,b) = <phi(x,a,b), mu_h(x')> and
// r_{m,h}(x,a,b) = <phi(x,a,b), theta_{m,h}>. Immutable after construction;
// construction validates that every transition row is a distribution within
// tolerance, |r| <= 1, ||theta||_2 <= sqrt(d).
class LinearMdpModel : public FeatureOracle {
 public:
  // mu: per step, d x num_states row-major (row j = measure j over states).
  // theta_l/theta_f: per step, d entries.
  LinearMdpModel(GameShape shape, FeatureMap features,
                 std::vector<std::vector<double>> mu,
                 std::vector<std::vector<double>> theta_l,
                 std::vector<std::vector<double>> theta_f, int initial_state);

  const GameShape& shape() const noexcept { return shape_; }
  int initial_state() const noexcept { return initial_state_; }

  int feature_dim() const override { return shape_.feature_dim; }
  int num_leader_actions() const override { return shape_.num_leader_actions; }
  int num_follower_actions() const override {
    return shape_.num_follower_actions;
  }
  std::span<const double> features(int x, int a, int b) const override;

  // Valid probability vector over states: entries clamped at -1e-12 -> 0 and
  // renormalized; deviations beyond tolerance raise a construction error.
  std::vector<double> transition_distribution(int h, int x, int a, int b) const;

  // Inverse-CDF draw from transition_distribution; one uniform per call.
  int transition_sample(int h, int x, int a, int b, Rng& rng) const;

  double reward(Player m, int h, int x, int a, int b) const;

  const std::vector<double>& mu(int h) const { return mu_[h]; }
  const std::vector<double>& theta(Player m, int h) const {
    return m == Player::leader ? theta_l_[h] : theta_f_[h];
  }

 private:
  void check_indices(int h, int x, int a, int b) const;

  GameShape shape_;
  FeatureMap features_;
  std::vector<std::vector<double>> mu_;       // per h, d x S row-major
  std::vector<std::vector<double>> theta_l_;  // per h, d
  std::vector<std::vector<double>> theta_f_;
  int initial_state_;
};

// Explicit tabular game: transition rows and reward tables per (h,x,a,b).
struct TabularGame {
  GameShape shape;  // feature_dim ignored, derived as |S||A||B|
  // transitions[(h * triples + triple) * S + x'] with triple = (x,a,b) b-fastest
  std::vector<double> transitions;
  std::vector<double> rewards_leader;    // h * triples + triple
  std::vector<double> rewards_follower;
  int initial_state = 0;
};

// One-hot embedding of a tabular game as a linear MDP with d = |S||A||B|.
// Round-trips transition rows and reward tables exactly.
LinearMdpModel tabular_to_linear(const TabularGame& game);

// Random valid linear MDP: features uniform on the d-simplex, each mu row an
// independent Dirichlet(1,...,1) distribution over states, theta uniform in
// [-1,1]^d. Every output satisfies the model invariants by construction.
LinearMdpModel random_linear_mdp(const GameShape& shape, std::uint64_t seed,
                                 int initial_state = 0);

// Random tabular game: Dirichlet(1,...,1) transition rows, rewards uniform in
// [-1,1]. Feed through tabular_to_linear for a pinned one-hot instance.
TabularGame random_tabular_game(const GameShape& shape, std::uint64_t seed);

// Structured-text model files (schema documented in the README).
void save_model(const LinearMdpModel& model, std::ostream& out);
void save_model_file(const LinearMdpModel& model, const std::string& path);
LinearMdpModel load_model(std::istream& in);
LinearMdpModel load_model_file(const std::string& path);

}  // namespace stackgame::env
