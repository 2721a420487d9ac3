#pragma once

#include <span>
#include <vector>

#include "stackgame/rng.hpp"

namespace stackgame::policy {

// Probability distribution over a finite action set.
struct ActionDistribution {
  std::vector<double> probs;

  int support_size() const noexcept { return static_cast<int>(probs.size()); }
};

// Soft-max distribution with inverse temperature alpha: entry i proportional
// to exp(alpha * values[i]), evaluated after subtracting max(values) so large
// alpha never overflows. alpha = 0 gives the uniform distribution; alpha =
// +infinity gives a point mass on the argmax (ties to the lowest index).
ActionDistribution soft_max(std::span<const double> values, double alpha);

// Inverse-CDF draw; consumes exactly one uniform from the generator.
int sample(const ActionDistribution& dist, Rng& rng);

double expected_value(const ActionDistribution& dist,
                      std::span<const double> values);

}  // namespace stackgame::policy
