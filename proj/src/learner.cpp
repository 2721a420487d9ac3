#include "stackgame/learner.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

namespace stackgame::learner {

void HyperParams::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("HyperParams: beta must be > 0");
  if (std::isnan(alpha_l) || alpha_l <= 0.0 || std::isnan(alpha_f) ||
      alpha_f <= 0.0) {
    throw std::invalid_argument("HyperParams: alphas must be in (0, inf]");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("HyperParams: lambda must be > 0");
  if (!(failure_prob > 0.0) || !(failure_prob < 1.0)) {
    throw std::invalid_argument("HyperParams: failure_prob must be in (0, 1)");
  }
  if (horizon < 1) throw std::invalid_argument("HyperParams: horizon must be >= 1");
  if (episodes < 1) throw std::invalid_argument("HyperParams: episodes must be >= 1");
}

HyperParams default_hyperparams(const env::GameShape& shape, long episodes,
                                double failure_prob, double c1) {
  if (!shape.valid()) {
    throw std::invalid_argument("default_hyperparams: degenerate shape");
  }
  if (episodes < 1) {
    throw std::invalid_argument("default_hyperparams: episodes must be >= 1");
  }
  if (!(failure_prob > 0.0) || !(failure_prob < 1.0)) {
    throw std::invalid_argument("default_hyperparams: failure_prob in (0, 1)");
  }
  if (!(c1 > 0.0)) {
    throw std::invalid_argument("default_hyperparams: c1 must be > 0");
  }

  const double num_a = shape.num_leader_actions;
  const double num_b = shape.num_follower_actions;
  const double d = shape.feature_dim;
  const double h = shape.horizon;
  const double t = static_cast<double>(episodes) * h;

  double factor = std::log(num_a * num_b) + 2.0 * std::log(num_a) * std::log(num_b);
  if (factor <= 0.0) factor = 1.0;  // |A| = |B| = 1
  const double iota = std::log(factor * 4.0 * d * t / failure_prob);

  const double log_a = num_a > 1.0 ? std::log(num_a) : 1.0;
  const double log_b = num_b > 1.0 ? std::log(num_b) : 1.0;
  const double sqrt_k = std::sqrt(static_cast<double>(episodes));

  HyperParams params;
  params.c1 = c1;
  params.beta = c1 * d * h * std::sqrt(iota);
  params.alpha_l = log_a * sqrt_k / h;
  params.alpha_f = log_b * sqrt_k / h;
  params.lambda = 1.0;
  params.failure_prob = failure_prob;
  params.horizon = shape.horizon;
  params.episodes = episodes;
  params.validate();
  return params;
}

Learner::Learner(const env::FeatureOracle& features, HyperParams params)
    : features_(&features), params_(std::move(params)) {
  params_.validate();
  const int h_count = params_.horizon;
  gram_.reserve(h_count);
  for (int h = 0; h < h_count; ++h) {
    gram_.emplace_back(features_->feature_dim(), params_.lambda);
  }
  w_l_.assign(h_count, std::vector<double>(features_->feature_dim(), 0.0));
  w_f_.assign(h_count, std::vector<double>(features_->feature_dim(), 0.0));
  buffer_.resize(h_count);
  absorbed_.assign(h_count, 0);
  bonus_sum_.assign(h_count, 0.0);
}

double Learner::bonus_budget(int h) const {
  const double lambda = params_.lambda;
  const double n = static_cast<double>(gram_.at(h).count());
  return 2.0 * features_->feature_dim() * std::log((lambda + n) / lambda);
}

void Learner::absorb_new_records() {
  for (int h = 0; h < params_.horizon; ++h) {
    auto& buf = buffer_[h];
    for (std::size_t i = absorbed_[h]; i < buf.size(); ++i) {
      const TransitionRecord& rec = buf[i];
      const std::span<const double> phi =
          features_->features(rec.x, rec.a, rec.b);
      bonus_sum_[h] += gram_[h].quad_form(phi);
      gram_[h].rank_one_update(phi);
      if (params_.lambda >= 1.0 && bonus_sum_[h] > bonus_budget(h) + 1e-9) {
        throw std::runtime_error(
            "elliptical potential violated at step " + std::to_string(h + 1) +
            ": sum " + std::to_string(bonus_sum_[h]) + " exceeds budget " +
            std::to_string(bonus_budget(h)) + " after " +
            std::to_string(gram_[h].count()) + " updates");
      }
    }
    absorbed_[h] = buf.size();
  }

  if (rebuild_check_) {
    for (int h = 0; h < params_.horizon; ++h) {
      linalg::GramState rebuilt(features_->feature_dim(), params_.lambda);
      for (const TransitionRecord& rec : buffer_[h]) {
        rebuilt.rank_one_update(features_->features(rec.x, rec.a, rec.b));
      }
      const int d = features_->feature_dim();
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          if (std::abs(rebuilt.gram_inv(i, j) - gram_[h].gram_inv(i, j)) > 1e-8) {
            throw std::runtime_error(
                "incremental Gram inverse diverged from full rebuild at step " +
                std::to_string(h + 1));
          }
        }
      }
    }
  }
}

void Learner::plan(long episode) {
  absorb_new_records();

  const int d = features_->feature_dim();
  for (int h = params_.horizon - 1; h >= 0; --h) {
    std::vector<double> target_l(d, 0.0), target_f(d, 0.0);
    // V_{m,h+1} is identical across records sharing a successor; memoize per
    // state within this pass (never across episodes).
    std::unordered_map<int, std::pair<double, double>> value_memo;
    for (const TransitionRecord& rec : buffer_[h]) {
      auto it = value_memo.find(rec.x_next);
      if (it == value_memo.end()) {
        const double vl = value_at(Player::leader, h + 1, rec.x_next);
        const double vf = value_at(Player::follower, h + 1, rec.x_next);
        it = value_memo.emplace(rec.x_next, std::make_pair(vl, vf)).first;
      }
      const std::span<const double> phi =
          features_->features(rec.x, rec.a, rec.b);
      const double tl = rec.r_l + it->second.first;
      const double tf = rec.r_f + it->second.second;
      for (int j = 0; j < d; ++j) {
        target_l[j] += phi[j] * tl;
        target_f[j] += phi[j] * tf;
      }
    }
    w_l_[h] = gram_[h].apply_inverse(target_l);
    w_f_[h] = gram_[h].apply_inverse(target_f);
  }
  planned_episode_ = episode;
}

double Learner::clipped_q(Player m, int h, std::span<const double> phi) const {
  const std::vector<double>& w = (m == Player::leader) ? w_l_[h] : w_f_[h];
  double linear = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) linear += w[j] * phi[j];
  const double bonus = params_.beta * std::sqrt(gram_[h].quad_form(phi));
  const double q = linear + bonus;
  const double cap = static_cast<double>(params_.horizon);
  return q > cap ? cap : q;
}

std::vector<double> Learner::q_values(Player m, int h, int x, int a) const {
  if (h < 0 || h >= params_.horizon) {
    throw std::out_of_range("q_values: step out of range");
  }
  const int num_b = features_->num_follower_actions();
  std::vector<double> q(num_b);
  for (int b = 0; b < num_b; ++b) {
    q[b] = clipped_q(m, h, features_->features(x, a, b));
  }
  return q;
}

policy::ActionDistribution Learner::follower_policy(int h, int x, int a) const {
  return policy::soft_max(q_values(Player::follower, h, x, a), params_.alpha_f);
}

std::vector<double> Learner::marginal_q(int h, int x) const {
  const int num_a = features_->num_leader_actions();
  std::vector<double> mq(num_a);
  for (int a = 0; a < num_a; ++a) {
    mq[a] = policy::expected_value(follower_policy(h, x, a),
                                   q_values(Player::leader, h, x, a));
  }
  return mq;
}

policy::ActionDistribution Learner::leader_policy(int h, int x) const {
  return policy::soft_max(marginal_q(h, x), params_.alpha_l);
}

double Learner::value_at(Player m, int h, int x) const {
  if (h < 0 || h > params_.horizon) {
    throw std::out_of_range("value_at: step out of range");
  }
  if (h == params_.horizon) return 0.0;

  const int num_a = features_->num_leader_actions();
  const policy::ActionDistribution pi_l = leader_policy(h, x);
  double value = 0.0;
  if (m == Player::leader) {
    const std::vector<double> mq = marginal_q(h, x);
    for (int a = 0; a < num_a; ++a) value += pi_l.probs[a] * mq[a];
  } else {
    for (int a = 0; a < num_a; ++a) {
      const double vbar = policy::expected_value(
          follower_policy(h, x, a), q_values(Player::follower, h, x, a));
      value += pi_l.probs[a] * vbar;
    }
  }
  return value;
}

int Learner::act_leader(int h, int x, Rng& rng) const {
  return policy::sample(leader_policy(h, x), rng);
}

int Learner::act_follower(int h, int x, int a, Rng& rng) const {
  return policy::sample(follower_policy(h, x, a), rng);
}

void Learner::record_transition(const TransitionRecord& rec) {
  if (rec.h < 0 || rec.h >= params_.horizon) {
    throw std::invalid_argument("record_transition: step out of range");
  }
  if (rec.x < 0 || rec.x_next < 0 || rec.a < 0 ||
      rec.a >= features_->num_leader_actions() || rec.b < 0 ||
      rec.b >= features_->num_follower_actions()) {
    throw std::invalid_argument("record_transition: index out of range");
  }
  if (std::abs(rec.r_l) > 1.0 + 1e-9 || std::abs(rec.r_f) > 1.0 + 1e-9) {
    throw std::invalid_argument("record_transition: reward outside [-1, 1]");
  }
  buffer_[rec.h].push_back(rec);
}

std::span<const double> Learner::weights(Player m, int h) const {
  const std::vector<double>& w =
      (m == Player::leader) ? w_l_.at(h) : w_f_.at(h);
  return {w.data(), w.size()};
}

void Learner::write_checkpoint(std::ostream& out, long episode) const {
  char buf[40];
  for (int h = 0; h < params_.horizon; ++h) {
    out << "[checkpoint k=" << episode << " h=" << (h + 1) << "]\n";
    for (const char* name : {"w_l", "w_f"}) {
      const std::vector<double>& w = (name[2] == 'l') ? w_l_[h] : w_f_[h];
      out << name << " =";
      for (double v : w) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ' ' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace stackgame::learner
