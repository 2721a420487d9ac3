#include "stackgame/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stackgame::policy {

ActionDistribution soft_max(std::span<const double> values, double alpha) {
  if (values.empty()) {
    throw std::invalid_argument("soft_max: empty value vector");
  }
  if (std::isnan(alpha) || alpha < 0.0) {
    throw std::invalid_argument("soft_max: alpha must be >= 0 or +inf");
  }
  for (double v : values) {
    if (std::isnan(v)) throw std::invalid_argument("soft_max: NaN value");
  }

  const std::size_t n = values.size();
  ActionDistribution dist;
  dist.probs.assign(n, 0.0);

  if (std::isinf(alpha)) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (values[i] > values[best]) best = i;
    }
    dist.probs[best] = 1.0;
    return dist;
  }
  if (alpha == 0.0) {
    std::fill(dist.probs.begin(), dist.probs.end(), 1.0 / static_cast<double>(n));
    return dist;
  }

  const double vmax = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dist.probs[i] = std::exp(alpha * (values[i] - vmax));
    sum += dist.probs[i];
  }
  for (double& p : dist.probs) p /= sum;
  return dist;
}

int sample(const ActionDistribution& dist, Rng& rng) {
  const std::size_t n = dist.probs.size();
  if (n == 0) throw std::invalid_argument("sample: empty distribution");
  double sum = 0.0;
  for (double p : dist.probs) {
    if (std::isnan(p) || p < 0.0) {
      throw std::invalid_argument("sample: negative or NaN probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("sample: probabilities do not sum to 1");
  }

  const double u = rng.next_uniform() * sum;
  double cum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += dist.probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(n - 1);
}

double expected_value(const ActionDistribution& dist,
                      std::span<const double> values) {
  if (dist.probs.size() != values.size()) {
    throw std::invalid_argument("expected_value: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += dist.probs[i] * values[i];
  }
  return acc;
}

}  // namespace stackgame::policy
