#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "stackgame/policy.hpp"
#include "stackgame/rng.hpp"

using stackgame::Rng;
using stackgame::policy::ActionDistribution;
using stackgame::policy::expected_value;
using stackgame::policy::sample;
using stackgame::policy::soft_max;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("equal values give the uniform distribution for any alpha") {
  const std::vector<double> v = {0.7, 0.7, 0.7};
  for (double alpha : {0.0, 0.5, 3.0, 1e6}) {
    const ActionDistribution dist = soft_max(v, alpha);
    for (double p : dist.probs) CHECK(p == doctest::Approx(1.0 / 3));
  }
}

TEST_CASE("alpha = infinity is the greedy limit with lowest-index ties") {
  const std::vector<double> v = {1.0, 0.0};
  const ActionDistribution dist = soft_max(v, kInf);
  CHECK(dist.probs[0] == 1.0);
  CHECK(dist.probs[1] == 0.0);

  const std::vector<double> tie = {2.0, 5.0, 5.0};
  const ActionDistribution tied = soft_max(tie, kInf);
  CHECK(tied.probs[1] == 1.0);
  CHECK(tied.probs[2] == 0.0);
}

TEST_CASE("soft_max([1,0], 1) matches the closed form") {
  const std::vector<double> v = {1.0, 0.0};
  const ActionDistribution dist = soft_max(v, 1.0);
  const double e = std::exp(1.0);
  CHECK(dist.probs[0] == doctest::Approx(e / (e + 1)).epsilon(1e-12));
  CHECK(dist.probs[1] == doctest::Approx(1 / (e + 1)).epsilon(1e-12));
  CHECK(dist.probs[0] == doctest::Approx(0.73105857863).epsilon(1e-9));
}

TEST_CASE("alpha = 0 is uniform regardless of values") {
  const std::vector<double> v = {-3.0, 10.0, 4.0, 4.0};
  const ActionDistribution dist = soft_max(v, 0.0);
  for (double p : dist.probs) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("huge but finite alpha does not overflow") {
  const std::vector<double> v = {100.0, -100.0, 99.0};
  const ActionDistribution dist = soft_max(v, 1e8);
  CHECK(dist.probs[0] == doctest::Approx(1.0));
  double sum = 0.0;
  for (double p : dist.probs) {
    CHECK(std::isfinite(p));
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("soft_max rejects bad input") {
  CHECK_THROWS_AS(soft_max(std::vector<double>{}, 1.0), std::invalid_argument);
  const std::vector<double> with_nan = {1.0, std::nan("")};
  CHECK_THROWS_AS(soft_max(with_nan, 1.0), std::invalid_argument);
  const std::vector<double> v = {1.0, 2.0};
  CHECK_THROWS_AS(soft_max(v, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(soft_max(v, std::nan("")), std::invalid_argument);
}

TEST_CASE("sampling a point mass returns its support index") {
  ActionDistribution dist;
  dist.probs = {0.0, 0.0, 1.0, 0.0};
  for (std::uint64_t seed : {1, 7, 99}) {
    Rng rng(seed);
    CHECK(sample(dist, rng) == 2);
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  ActionDistribution dist;
  dist.probs = {0.2, 0.3, 0.5};
  Rng a(12345), b(12345);
  for (int i = 0; i < 100; ++i) CHECK(sample(dist, a) == sample(dist, b));
}

TEST_CASE("uniform sampling frequencies over 1e5 draws") {
  ActionDistribution dist;
  dist.probs = {0.5, 0.5};
  Rng rng(2024);
  int count = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) count += sample(dist, rng);
  const double freq = static_cast<double>(count) / n;
  CHECK(std::abs(freq - 0.5) < 0.01);
}

TEST_CASE("sample rejects invalid distributions") {
  ActionDistribution bad;
  bad.probs = {0.4, 0.4};
  Rng rng(1);
  CHECK_THROWS_AS(sample(bad, rng), std::invalid_argument);
  bad.probs = {1.5, -0.5};
  CHECK_THROWS_AS(sample(bad, rng), std::invalid_argument);
  bad.probs.clear();
  CHECK_THROWS_AS(sample(bad, rng), std::invalid_argument);
}

TEST_CASE("expected_value basics") {
  ActionDistribution point;
  point.probs = {0.0, 1.0, 0.0};
  const std::vector<double> v = {5.0, 7.0, 9.0};
  CHECK(expected_value(point, v) == doctest::Approx(7.0));

  ActionDistribution uniform;
  uniform.probs = {0.5, 0.5};
  const std::vector<double> zero_one = {0.0, 1.0};
  CHECK(expected_value(uniform, zero_one) == doctest::Approx(0.5));

  CHECK_THROWS_AS(expected_value(uniform, v), std::invalid_argument);
}

TEST_CASE("soft_max composed with expected_value") {
  const std::vector<double> v = {1.0, 0.0};
  const double value = expected_value(soft_max(v, 1.0), v);
  CHECK(value == doctest::Approx(0.73105857863).epsilon(1e-9));
}

TEST_CASE("l1 Lipschitz bound 2*alpha*||x-y||_inf over 1e4 random pairs") {
  Rng rng(55);
  const double alphas[] = {0.1, 1.0, 10.0};
  for (int t = 0; t < 10000; ++t) {
    const int n = 2 + static_cast<int>(rng.next_uniform() * 7);
    std::vector<double> x(n), y(n);
    double linf = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = 4.0 * rng.next_uniform() - 2.0;
      y[i] = x[i] + (2.0 * rng.next_uniform() - 1.0);
      linf = std::max(linf, std::abs(x[i] - y[i]));
    }
    for (double alpha : alphas) {
      const ActionDistribution px = soft_max(x, alpha);
      const ActionDistribution py = soft_max(y, alpha);
      double l1 = 0.0;
      for (int i = 0; i < n; ++i) l1 += std::abs(px.probs[i] - py.probs[i]);
      CHECK(l1 <= 2.0 * alpha * linf + 1e-12);
    }
  }
}

TEST_CASE("log-sum-exp gap: max - <sm(x), x> <= log(n)/alpha") {
  Rng rng(56);
  const double alphas[] = {0.1, 1.0, 10.0};
  for (int t = 0; t < 10000; ++t) {
    const int n = 1 + static_cast<int>(rng.next_uniform() * 8);
    std::vector<double> x(n);
    for (double& v : x) v = 6.0 * rng.next_uniform() - 3.0;
    double best = x[0];
    for (double v : x) best = std::max(best, v);
    for (double alpha : alphas) {
      const double value = expected_value(soft_max(x, alpha), x);
      CHECK(best - value <= std::log(static_cast<double>(n)) / alpha + 1e-12);
    }
  }
}

TEST_CASE("argmax probability is nondecreasing in alpha") {
  Rng rng(57);
  for (int t = 0; t < 500; ++t) {
    const int n = 2 + static_cast<int>(rng.next_uniform() * 6);
    std::vector<double> x(n);
    for (double& v : x) v = 4.0 * rng.next_uniform() - 2.0;
    x[t % n] += 0.25;  // unique argmax
    int best = 0;
    for (int i = 1; i < n; ++i) {
      if (x[i] > x[best]) best = i;
    }
    double prev = 0.0;
    for (double alpha : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, kInf}) {
      const double p = soft_max(x, alpha).probs[best];
      CHECK(p >= prev - 1e-12);
      prev = p;
    }
  }
}

TEST_CASE("simplex validity across the alpha range") {
  Rng rng(58);
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(rng.next_uniform() * 8);
    std::vector<double> x(n);
    for (double& v : x) v = 40.0 * rng.next_uniform() - 20.0;
    for (double alpha : {0.0, 1e-6, 1.0, 1e3, kInf}) {
      const ActionDistribution dist = soft_max(x, alpha);
      double sum = 0.0;
      for (double p : dist.probs) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}
