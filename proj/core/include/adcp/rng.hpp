#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace adcp {

/// SplitMix64 step; used for seed derivation and keyed noise streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Mixes up to three words into one derived seed. Distinct inputs give
/// statistically independent streams (per-trial seeds, noise keys).
inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s = h ^ b;
  h = splitmix64(s);
  s = h ^ c;
  return splitmix64(s);
}

/// Deterministic RNG with hand-rolled samplers. std:: distributions are
/// implementation-defined, which would break byte-identical outputs for a
/// fixed seed; everything here is pinned to one algorithm.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t u64() { return eng_(); }

  /// Uniform draw from {0, ..., n-1} via 128-bit multiply-shift.
  std::int64_t index(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("Rng::index: n must be positive");
    return static_cast<std::int64_t>(
        (static_cast<unsigned __int128>(u64()) *
         static_cast<unsigned __int128>(n)) >>
        64);
  }

  /// Uniform real in [0, 1) with 53-bit resolution.
  double real() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  /// Uniform real in [lo, hi).
  double real(double lo, double hi) { return lo + (hi - lo) * real(); }

  /// Standard normal via Box-Muller; the spare deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = real();
    while (u1 <= 0.0) u1 = real();
    const double u2 = real();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Draws one index from a discrete distribution given by nonnegative
  /// weights, by inverse CDF over the running sum.
  std::size_t discrete(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0))
      throw std::invalid_argument("Rng::discrete: weights must sum > 0");
    const double target = real() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (target < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Standard normal keyed by (seed, counter). Repeated evaluation at the same
/// key returns the same deviate, so additive noise never has to be stored.
inline double keyed_normal(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t s = derive_seed(seed, counter);
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  double u1 = static_cast<double>(a >> 11) * 0x1.0p-53;
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace adcp
