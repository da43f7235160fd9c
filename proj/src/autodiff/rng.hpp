#pragma once

#include <cstdint>
#include <random>

namespace s2g::ad {

/// splitmix64 step; used to derive independent seed streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Explicitly threaded random source. Distribution code is written out here
/// rather than using <random> distributions so streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Stream `stream` of `seed`; pure, unlike split().
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed ^ (stream * 0xD1B54A32D192ED03ULL);
    return Rng(splitmix64(state));
  }

  /// Independent child stream, keyed by `stream`.
  Rng split(std::uint64_t stream) {
    std::uint64_t state = engine_() ^ (stream * 0xD1B54A32D192ED03ULL);
    return Rng(splitmix64(state));
  }

 private:
  static std::uint64_t mix(std::uint64_t seed) {
    std::uint64_t state = seed;
    return splitmix64(state);
  }

  std::mt19937_64 engine_;
};

}  // namespace s2g::ad
