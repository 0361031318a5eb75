#pragma once

// Counter-based pseudo-random streams. Every value is a pure function of
// (key, counter), so results do not depend on evaluation order, thread
// count or platform. Doubles are built from raw bits; no <random>
// distribution objects are used because their output is not portable.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qspec {

/// SplitMix64 finalizer; a bijection on 64-bit words.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hash of a (seed, index) pair, used to key independent streams.
[[nodiscard]] constexpr std::uint64_t stream_key(std::uint64_t seed,
                                                 std::uint64_t index) noexcept {
  return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

/// Uniform double in [0,1) with 53 random bits.
[[nodiscard]] constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

__extension__ using uint128_t = unsigned __int128;

/// High word of the 128-bit product.
[[nodiscard]] inline std::uint64_t mulhi(std::uint64_t a, std::uint64_t b) noexcept {
  return static_cast<std::uint64_t>((static_cast<uint128_t>(a) * b) >> 64);
}

/// Uniform integer in [0, n) from one 64-bit word (multiply-high).
[[nodiscard]] inline std::uint64_t bounded(std::uint64_t bits, std::uint64_t n) noexcept {
  return mulhi(bits, n);
}

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : state_(stream_key(seed, stream)) {}

  constexpr std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  constexpr double uniform() noexcept { return to_unit(next_u64()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  std::uint64_t index(std::uint64_t n) noexcept { return bounded(next_u64(), n); }

  /// Standard normal by Box-Muller (one value per call, no caching).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace qspec
