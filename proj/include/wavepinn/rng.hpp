#pragma once

#include <cstdint>
#include <random>

namespace wavepinn {

// splitmix64 step, used to scramble user seeds before they reach the engine
// so that small consecutive seeds give well-separated streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic uniform draws in [0, 1) built from raw mt19937_64 bits, so
// results do not depend on the standard library's distribution implementation.
class UniformBits {
 public:
  explicit UniformBits(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  double next() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t next_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(next() * static_cast<double>(n));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace wavepinn
