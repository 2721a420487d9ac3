#pragma once

#include <cstdint>
#include <random>

namespace stackgame {

// Seedable deterministic generator. All sampling in the library goes through
// next_uniform() so that a fixed seed yields a fixed draw sequence within a
// build, independent of std::*_distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform draw in [0, 1) with 53 bits of resolution.
  double next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stackgame
