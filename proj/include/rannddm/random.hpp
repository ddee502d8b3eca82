#pragma once

#include <cstdint>

namespace rannddm {

/// Counter-based generator (splitmix64). Chosen over std engines so that
/// streams are bit-identical across standard libraries and platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [-1,1).
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  /// Uniform in [lo,hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed for subdomain j from a base seed.
inline std::uint64_t subdomain_seed(std::uint64_t base, int j) {
  SplitMix64 mix(base ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(j + 1)));
  return mix.next_u64();
}

}  // namespace rannddm
