#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace depmax {

/// Counter-based pseudo-random generator: draw i of stream `seed` is the
/// SplitMix64 finalizer applied to seed + i * 0x9E3779B97F4A7C15. The state
/// is two 64-bit integers and every operation is exact integer arithmetic,
/// so streams are reproducible bit-for-bit on any platform.
///
/// Normal variates use Box-Muller on consecutive counter values; each call
/// to normal() or normal_pair() consumes exactly two counters.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed), counter_(0) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// One Box-Muller pair from two consecutive counters.
  std::pair<double, double> normal_pair() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  /// Single standard normal. Always consumes two counters (the sine
  /// branch is discarded) so the draw count per call is fixed.
  double normal() { return normal_pair().first; }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace depmax
