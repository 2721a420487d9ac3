#include "stackgame/env.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace stackgame::env {

namespace {

constexpr double kEntryTolerance = 1e-12;
constexpr double kSumTolerance = 1e-9;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// Dirichlet(1,...,1): normalized unit-rate exponentials.
std::vector<double> dirichlet_uniform(int n, Rng& rng) {
  std::vector<double> out(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = -std::log(1.0 - rng.next_uniform());
    sum += out[i];
  }
  if (sum <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / n);
    return out;
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace

FeatureMap::FeatureMap(int num_states, int num_leader_actions,
                       int num_follower_actions, int dim,
                       std::vector<double> table)
    : num_states_(num_states),
      num_leader_actions_(num_leader_actions),
      num_follower_actions_(num_follower_actions),
      dim_(dim),
      table_(std::move(table)) {
  const std::size_t triples = static_cast<std::size_t>(num_states) *
                              num_leader_actions * num_follower_actions;
  if (num_states < 1 || num_leader_actions < 1 || num_follower_actions < 1 ||
      dim < 1) {
    throw std::invalid_argument("FeatureMap: degenerate shape");
  }
  if (table_.size() != triples * static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("FeatureMap: table size mismatch");
  }
  for (std::size_t t = 0; t < triples; ++t) {
    std::span<const double> phi(table_.data() + t * dim,
                                static_cast<std::size_t>(dim));
    if (norm2(phi) > 1.0 + 1e-9) {
      throw std::invalid_argument("FeatureMap: ||phi||_2 exceeds 1");
    }
  }
}

std::span<const double> FeatureMap::at(int x, int a, int b) const {
  if (x < 0 || x >= num_states_ || a < 0 || a >= num_leader_actions_ || b < 0 ||
      b >= num_follower_actions_) {
    throw std::out_of_range("FeatureMap: index out of range");
  }
  const std::size_t t =
      static_cast<std::size_t>(x * num_leader_actions_ + a) *
          num_follower_actions_ +
      b;
  return {table_.data() + t * dim_, static_cast<std::size_t>(dim_)};
}

LinearMdpModel::LinearMdpModel(GameShape shape, FeatureMap features,
                               std::vector<std::vector<double>> mu,
                               std::vector<std::vector<double>> theta_l,
                               std::vector<std::vector<double>> theta_f,
                               int initial_state)
    : shape_(shape),
      features_(std::move(features)),
      mu_(std::move(mu)),
      theta_l_(std::move(theta_l)),
      theta_f_(std::move(theta_f)),
      initial_state_(initial_state) {
  if (!shape_.valid()) {
    throw std::invalid_argument("LinearMdpModel: degenerate shape");
  }
  if (features_.dim() != shape_.feature_dim) {
    throw std::invalid_argument("LinearMdpModel: feature dim mismatch");
  }
  if (initial_state_ < 0 || initial_state_ >= shape_.num_states) {
    throw std::invalid_argument("LinearMdpModel: initial state out of range");
  }
  const int h_count = shape_.horizon;
  const std::size_t d = static_cast<std::size_t>(shape_.feature_dim);
  const std::size_t s = static_cast<std::size_t>(shape_.num_states);
  if (mu_.size() != static_cast<std::size_t>(h_count) ||
      theta_l_.size() != static_cast<std::size_t>(h_count) ||
      theta_f_.size() != static_cast<std::size_t>(h_count)) {
    throw std::invalid_argument("LinearMdpModel: per-step table count mismatch");
  }
  for (int h = 0; h < h_count; ++h) {
    if (mu_[h].size() != d * s || theta_l_[h].size() != d ||
        theta_f_[h].size() != d) {
      throw std::invalid_argument("LinearMdpModel: per-step table size mismatch");
    }
    if (norm2(theta_l_[h]) > std::sqrt(static_cast<double>(d)) + 1e-9 ||
        norm2(theta_f_[h]) > std::sqrt(static_cast<double>(d)) + 1e-9) {
      throw std::invalid_argument("LinearMdpModel: ||theta||_2 exceeds sqrt(d)");
    }
  }
  // Model validity: every reachable transition row must be a distribution
  // within tolerance and every reward within [-1, 1].
  for (int h = 0; h < h_count; ++h) {
    for (int x = 0; x < shape_.num_states; ++x) {
      for (int a = 0; a < shape_.num_leader_actions; ++a) {
        for (int b = 0; b < shape_.num_follower_actions; ++b) {
          (void)transition_distribution(h, x, a, b);
          if (std::abs(reward(Player::leader, h, x, a, b)) > 1.0 + kSumTolerance ||
              std::abs(reward(Player::follower, h, x, a, b)) > 1.0 + kSumTolerance) {
            throw std::invalid_argument("LinearMdpModel: reward outside [-1, 1]");
          }
        }
      }
    }
  }
}

void LinearMdpModel::check_indices(int h, int x, int a, int b) const {
  if (h < 0 || h >= shape_.horizon || x < 0 || x >= shape_.num_states ||
      a < 0 || a >= shape_.num_leader_actions || b < 0 ||
      b >= shape_.num_follower_actions) {
    throw std::out_of_range("LinearMdpModel: index out of range");
  }
}

std::span<const double> LinearMdpModel::features(int x, int a, int b) const {
  return features_.at(x, a, b);
}

std::vector<double> LinearMdpModel::transition_distribution(int h, int x, int a,
                                                            int b) const {
  check_indices(h, x, a, b);
  const int d = shape_.feature_dim;
  const int s = shape_.num_states;
  const std::span<const double> phi = features_.at(x, a, b);
  const std::vector<double>& m = mu_[h];

  std::vector<double> p(s, 0.0);
  for (int j = 0; j < d; ++j) {
    const double w = phi[j];
    if (w == 0.0) continue;
    const double* row = m.data() + static_cast<std::size_t>(j) * s;
    for (int y = 0; y < s; ++y) p[y] += w * row[y];
  }

  double sum = 0.0;
  for (int y = 0; y < s; ++y) {
    if (p[y] < 0.0) {
      if (p[y] < -kEntryTolerance) {
        throw std::runtime_error(
            "LinearMdpModel: transition row has a negative entry beyond "
            "tolerance (invalid construction)");
      }
      p[y] = 0.0;
    }
    sum += p[y];
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::runtime_error(
        "LinearMdpModel: transition row sum deviates from 1 beyond tolerance "
        "(invalid construction)");
  }
  for (int y = 0; y < s; ++y) p[y] /= sum;
  return p;
}

int LinearMdpModel::transition_sample(int h, int x, int a, int b,
                                      Rng& rng) const {
  const std::vector<double> p = transition_distribution(h, x, a, b);
  const double u = rng.next_uniform();
  double cum = 0.0;
  for (int y = 0; y < shape_.num_states; ++y) {
    cum += p[y];
    if (u < cum) return y;
  }
  return shape_.num_states - 1;
}

double LinearMdpModel::reward(Player m, int h, int x, int a, int b) const {
  check_indices(h, x, a, b);
  const std::vector<double>& theta =
      (m == Player::leader) ? theta_l_[h] : theta_f_[h];
  return dot(features_.at(x, a, b), theta);
}

LinearMdpModel tabular_to_linear(const TabularGame& game) {
  GameShape shape = game.shape;
  const int triples = shape.num_triples();
  shape.feature_dim = triples;
  if (!shape.valid()) {
    throw std::invalid_argument("tabular_to_linear: degenerate shape");
  }
  const int s = shape.num_states;
  const int h_count = shape.horizon;
  if (game.transitions.size() !=
          static_cast<std::size_t>(h_count) * triples * s ||
      game.rewards_leader.size() != static_cast<std::size_t>(h_count) * triples ||
      game.rewards_follower.size() !=
          static_cast<std::size_t>(h_count) * triples) {
    throw std::invalid_argument("tabular_to_linear: table size mismatch");
  }

  for (std::size_t i = 0; i < game.rewards_leader.size(); ++i) {
    if (std::abs(game.rewards_leader[i]) > 1.0 ||
        std::abs(game.rewards_follower[i]) > 1.0) {
      throw std::invalid_argument("tabular_to_linear: reward outside [-1, 1]");
    }
  }
  for (int h = 0; h < h_count; ++h) {
    for (int t = 0; t < triples; ++t) {
      double sum = 0.0;
      for (int y = 0; y < s; ++y) {
        const double p =
            game.transitions[(static_cast<std::size_t>(h) * triples + t) * s + y];
        if (p < -kEntryTolerance) {
          throw std::invalid_argument(
              "tabular_to_linear: negative transition probability");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kSumTolerance) {
        throw std::invalid_argument(
            "tabular_to_linear: transition row does not sum to 1");
      }
    }
  }

  // One-hot features: phi(x,a,b) = e_{triple_index(x,a,b)}.
  std::vector<double> table(static_cast<std::size_t>(triples) * triples, 0.0);
  for (int t = 0; t < triples; ++t) {
    table[static_cast<std::size_t>(t) * triples + t] = 1.0;
  }
  FeatureMap features(shape.num_states, shape.num_leader_actions,
                      shape.num_follower_actions, triples, std::move(table));

  std::vector<std::vector<double>> mu(h_count);
  std::vector<std::vector<double>> theta_l(h_count), theta_f(h_count);
  for (int h = 0; h < h_count; ++h) {
    mu[h].assign(static_cast<std::size_t>(triples) * s, 0.0);
    theta_l[h].assign(triples, 0.0);
    theta_f[h].assign(triples, 0.0);
    for (int t = 0; t < triples; ++t) {
      for (int y = 0; y < s; ++y) {
        mu[h][static_cast<std::size_t>(t) * s + y] =
            game.transitions[(static_cast<std::size_t>(h) * triples + t) * s + y];
      }
      theta_l[h][t] = game.rewards_leader[static_cast<std::size_t>(h) * triples + t];
      theta_f[h][t] =
          game.rewards_follower[static_cast<std::size_t>(h) * triples + t];
    }
  }
  return LinearMdpModel(shape, std::move(features), std::move(mu),
                        std::move(theta_l), std::move(theta_f),
                        game.initial_state);
}

LinearMdpModel random_linear_mdp(const GameShape& shape, std::uint64_t seed,
                                 int initial_state) {
  if (!shape.valid()) {
    throw std::invalid_argument("random_linear_mdp: degenerate shape");
  }
  Rng rng(seed);
  const int d = shape.feature_dim;
  const int s = shape.num_states;
  const int triples = shape.num_triples();

  std::vector<double> table;
  table.reserve(static_cast<std::size_t>(triples) * d);
  for (int t = 0; t < triples; ++t) {
    const std::vector<double> phi = dirichlet_uniform(d, rng);
    table.insert(table.end(), phi.begin(), phi.end());
  }
  FeatureMap features(shape.num_states, shape.num_leader_actions,
                      shape.num_follower_actions, d, std::move(table));

  std::vector<std::vector<double>> mu(shape.horizon);
  for (int h = 0; h < shape.horizon; ++h) {
    mu[h].reserve(static_cast<std::size_t>(d) * s);
    for (int j = 0; j < d; ++j) {
      const std::vector<double> row = dirichlet_uniform(s, rng);
      mu[h].insert(mu[h].end(), row.begin(), row.end());
    }
  }
  std::vector<std::vector<double>> theta_l(shape.horizon), theta_f(shape.horizon);
  for (int h = 0; h < shape.horizon; ++h) {
    theta_l[h].resize(d);
    for (int j = 0; j < d; ++j) theta_l[h][j] = 2.0 * rng.next_uniform() - 1.0;
  }
  for (int h = 0; h < shape.horizon; ++h) {
    theta_f[h].resize(d);
    for (int j = 0; j < d; ++j) theta_f[h][j] = 2.0 * rng.next_uniform() - 1.0;
  }
  return LinearMdpModel(shape, std::move(features), std::move(mu),
                        std::move(theta_l), std::move(theta_f), initial_state);
}

TabularGame random_tabular_game(const GameShape& shape, std::uint64_t seed) {
  GameShape s = shape;
  s.feature_dim = s.num_triples();
  if (!s.valid()) {
    throw std::invalid_argument("random_tabular_game: degenerate shape");
  }
  Rng rng(seed);
  TabularGame game;
  game.shape = s;
  const int triples = s.num_triples();
  game.transitions.reserve(static_cast<std::size_t>(s.horizon) * triples *
                           s.num_states);
  for (int h = 0; h < s.horizon; ++h) {
    for (int t = 0; t < triples; ++t) {
      const std::vector<double> row = dirichlet_uniform(s.num_states, rng);
      game.transitions.insert(game.transitions.end(), row.begin(), row.end());
    }
  }
  game.rewards_leader.resize(static_cast<std::size_t>(s.horizon) * triples);
  for (double& r : game.rewards_leader) r = 2.0 * rng.next_uniform() - 1.0;
  game.rewards_follower.resize(static_cast<std::size_t>(s.horizon) * triples);
  for (double& r : game.rewards_follower) r = 2.0 * rng.next_uniform() - 1.0;
  game.initial_state = 0;
  return game;
}

namespace {

void write_row(std::ostream& out, std::span<const double> row) {
  char buf[40];
  for (std::size_t i = 0; i < row.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
    if (i) out << ' ';
    out << buf;
  }
  out << '\n';
}

std::vector<double> parse_row(const std::string& line, int expected,
                              const std::string& where) {
  std::istringstream iss(line);
  std::vector<double> row;
  double v;
  while (iss >> v) row.push_back(v);
  if (static_cast<int>(row.size()) != expected) {
    throw std::runtime_error("model file: expected " + std::to_string(expected) +
                             " numbers in " + where + ", got " +
                             std::to_string(row.size()));
  }
  return row;
}

}  // namespace

void save_model(const LinearMdpModel& model, std::ostream& out) {
  const GameShape& sh = model.shape();
  out << "stackgame-model v1\n";
  out << "[shape]\n";
  out << "num_states = " << sh.num_states << '\n';
  out << "num_leader_actions = " << sh.num_leader_actions << '\n';
  out << "num_follower_actions = " << sh.num_follower_actions << '\n';
  out << "horizon = " << sh.horizon << '\n';
  out << "feature_dim = " << sh.feature_dim << '\n';
  out << "initial_state = " << model.initial_state() << '\n';
  out << "[features]\n";
  for (int x = 0; x < sh.num_states; ++x) {
    for (int a = 0; a < sh.num_leader_actions; ++a) {
      for (int b = 0; b < sh.num_follower_actions; ++b) {
        write_row(out, model.features(x, a, b));
      }
    }
  }
  for (int h = 0; h < sh.horizon; ++h) {
    out << "[mu h=" << (h + 1) << "]\n";
    const std::vector<double>& m = model.mu(h);
    for (int j = 0; j < sh.feature_dim; ++j) {
      write_row(out, {m.data() + static_cast<std::size_t>(j) * sh.num_states,
                      static_cast<std::size_t>(sh.num_states)});
    }
  }
  for (int h = 0; h < sh.horizon; ++h) {
    out << "[theta_l h=" << (h + 1) << "]\n";
    write_row(out, model.theta(Player::leader, h));
  }
  for (int h = 0; h < sh.horizon; ++h) {
    out << "[theta_f h=" << (h + 1) << "]\n";
    write_row(out, model.theta(Player::follower, h));
  }
}

void save_model_file(const LinearMdpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  save_model(model, out);
}

LinearMdpModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "stackgame-model v1") {
    throw std::runtime_error("model file: missing 'stackgame-model v1' header");
  }

  GameShape shape;
  int initial_state = 0;
  std::vector<std::vector<double>> feature_rows;
  std::map<int, std::vector<std::vector<double>>> mu_rows;
  std::map<int, std::vector<double>> theta_l_rows, theta_f_rows;

  enum class Section { none, shape, features, mu, theta_l, theta_f };
  Section section = Section::none;
  int section_h = 0;

  auto section_of = [&](const std::string& name) {
    if (name == "shape") return Section::shape;
    if (name == "features") return Section::features;
    if (name.rfind("mu h=", 0) == 0) {
      section_h = std::stoi(name.substr(5));
      return Section::mu;
    }
    if (name.rfind("theta_l h=", 0) == 0) {
      section_h = std::stoi(name.substr(10));
      return Section::theta_l;
    }
    if (name.rfind("theta_f h=", 0) == 0) {
      section_h = std::stoi(name.substr(10));
      return Section::theta_f;
    }
    throw std::runtime_error("model file: unknown section [" + name + "]");
  };

  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      const std::size_t close = line.find(']');
      if (close == std::string::npos) {
        throw std::runtime_error("model file: malformed section header");
      }
      section = section_of(line.substr(1, close - 1));
      continue;
    }
    switch (section) {
      case Section::shape: {
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
          throw std::runtime_error("model file: malformed shape line: " + line);
        }
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        const long value = std::stol(line.substr(eq + 1));
        if (key == "num_states") shape.num_states = static_cast<int>(value);
        else if (key == "num_leader_actions") shape.num_leader_actions = static_cast<int>(value);
        else if (key == "num_follower_actions") shape.num_follower_actions = static_cast<int>(value);
        else if (key == "horizon") shape.horizon = static_cast<int>(value);
        else if (key == "feature_dim") shape.feature_dim = static_cast<int>(value);
        else if (key == "initial_state") initial_state = static_cast<int>(value);
        else throw std::runtime_error("model file: unknown shape key: " + key);
        break;
      }
      case Section::features:
        feature_rows.push_back(parse_row(line, shape.feature_dim, "[features]"));
        break;
      case Section::mu:
        mu_rows[section_h].push_back(
            parse_row(line, shape.num_states, "[mu]"));
        break;
      case Section::theta_l:
        theta_l_rows[section_h] = parse_row(line, shape.feature_dim, "[theta_l]");
        break;
      case Section::theta_f:
        theta_f_rows[section_h] = parse_row(line, shape.feature_dim, "[theta_f]");
        break;
      case Section::none:
        throw std::runtime_error("model file: data before any section");
    }
  }

  if (!shape.valid()) throw std::runtime_error("model file: invalid [shape]");
  if (static_cast<int>(feature_rows.size()) != shape.num_triples()) {
    throw std::runtime_error("model file: feature row count mismatch");
  }
  std::vector<double> table;
  table.reserve(static_cast<std::size_t>(shape.num_triples()) * shape.feature_dim);
  for (const auto& row : feature_rows) {
    table.insert(table.end(), row.begin(), row.end());
  }

  std::vector<std::vector<double>> mu(shape.horizon);
  std::vector<std::vector<double>> theta_l(shape.horizon), theta_f(shape.horizon);
  for (int h = 1; h <= shape.horizon; ++h) {
    auto mit = mu_rows.find(h);
    if (mit == mu_rows.end() ||
        static_cast<int>(mit->second.size()) != shape.feature_dim) {
      throw std::runtime_error("model file: missing or short [mu h=" +
                               std::to_string(h) + "]");
    }
    for (const auto& row : mit->second) {
      mu[h - 1].insert(mu[h - 1].end(), row.begin(), row.end());
    }
    auto lit = theta_l_rows.find(h);
    auto fit = theta_f_rows.find(h);
    if (lit == theta_l_rows.end() || fit == theta_f_rows.end()) {
      throw std::runtime_error("model file: missing theta section for h=" +
                               std::to_string(h));
    }
    theta_l[h - 1] = lit->second;
    theta_f[h - 1] = fit->second;
  }

  FeatureMap features(shape.num_states, shape.num_leader_actions,
                      shape.num_follower_actions, shape.feature_dim,
                      std::move(table));
  return LinearMdpModel(shape, std::move(features), std::move(mu),
                        std::move(theta_l), std::move(theta_f), initial_state);
}

LinearMdpModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace stackgame::env
