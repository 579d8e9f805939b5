#pragma once

#include <cstdint>
#include <random>

#include "orbtrack/types.hpp"

namespace orbtrack {

/// Seeded generator plus the distributions drawn from it. Passed by reference
/// everywhere randomness is consumed so that runs are reproducible.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }

  StateVector standard_normal_state();
  Vector2 standard_normal_2();

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Counter-based seed split: stream i of a master seed is splitmix64(master + (i+1)*golden).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace orbtrack
