#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "pr/types.hpp"

namespace pr {

// All randomness in the toolkit flows through this wrapper so that runs are
// bit-reproducible: doubles are derived from the raw mt19937_64 stream
// directly instead of going through distribution objects whose output the
// standard leaves unspecified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the spare value is cached.
  double normal();

  // k uniform angles in [0, 2*pi).
  Vec phases(long k);

  // Standard normal vector.
  Vec normals(long k);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable 64-bit mix of a base seed and a label; used to derive independent
// per-signal streams that survive dataset reordering.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                          std::uint64_t index);

}  // namespace pr
