#pragma once

#include <cmath>
#include <cstdint>

namespace splitreloc {

// splitmix64 step (Steele/Lea/Flood). This is the 64-bit mix-and-shift
// generator behind every seeded stream in the project: synthetic weights,
// synthetic frames, noise models and the lognormal service sampler. The
// exact algorithm is part of the reproducibility contract, see README.
inline uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives the state of an independent stream from a base seed plus up to
// two stream indices (layer/param, frame index, ...). Streams with distinct
// (a, b) never share a sequence in practice.
inline uint64_t stream_key(uint64_t seed, uint64_t a, uint64_t b = 0) {
  uint64_t k = seed;
  k ^= 0x9E3779B97F4A7C15ULL * (a + 1);
  k ^= 0xC2B2AE3D27D4EB4FULL * (b + 1);
  return k;
}

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t state) : state_(state) {}

  uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1), 53 significant bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Consumes exactly two uniforms and keeps
  // no cached spare, so draw counts are easy to reason about when streams
  // are re-derived per frame.
  double next_gaussian() {
    double u1 = next_double_open();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  uint64_t state_;
};

}  // namespace splitreloc
