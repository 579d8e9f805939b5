#include "orbtrack/random.hpp"

namespace orbtrack {

StateVector RandomStream::standard_normal_state() {
  StateVector xi;
  for (int i = 0; i < 6; ++i) xi(i) = normal();
  return xi;
}

Vector2 RandomStream::standard_normal_2() {
  Vector2 xi;
  xi(0) = normal();
  xi(1) = normal();
  return xi;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace orbtrack
