#pragma once

#include <cmath>
#include <cstdint>

namespace d2s {

/// splitmix64 generator. The only entropy source in the project: every draw
/// is a pure function of (seed, counter), which keeps streams reproducible
/// and safe to sample concurrently from disjoint counter ranges.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Standard normal via Box-Muller (cosine branch only, stateless).
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  /// Uniform integer in [0, n). Modulo bias is irrelevant at our n << 2^64.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  uint64_t state_;
};

/// Derives an independent stream key from two (or three) keys.
inline uint64_t mix_keys(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t mix_keys(uint64_t a, uint64_t b, uint64_t c) {
  return mix_keys(mix_keys(a, b), c);
}

}  // namespace d2s
