#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

#include "aprior/fnv1a.hpp"

namespace aprior {

/// splitmix64 generator. All randomness in the library is drawn from
/// instances of this type so that logs reproduce across platforms.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  /// Independent stream for a named component (e.g. "channel", "selection").
  static SplitMix64 substream(std::uint64_t seed, std::string_view name) noexcept {
    SplitMix64 mixer(seed ^ fnv1a64(name));
    return SplitMix64(mixer.next());
  }

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t operator()() noexcept { return next(); }
  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return std::numeric_limits<std::uint64_t>::max(); }

  /// Uniform integer in [0, bound) by rejection sampling. bound <= 1 returns 0
  /// without consuming a draw.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    // Largest multiple of bound representable in 2^64, expressed as a threshold.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// One draw; true with probability p. p <= 0 is never true, p >= 1 always.
  constexpr bool bernoulli(double p) noexcept { return uniform01() < p; }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace aprior
