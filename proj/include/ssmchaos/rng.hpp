#pragma once

#include <cstdint>
#include <cmath>

namespace ssm {

/// PCG XSL-RR 128/64 generator. Fixed algorithm so that runs are
/// reproducible across platforms and language ports.
class Pcg64 {
 public:
  explicit Pcg64(std::uint64_t seed, std::uint64_t stream = 0) {
    state_ = 0;
    inc_ = (static_cast<u128>(stream) << 1u) | 1u;
    next();
    state_ += (static_cast<u128>(seed) << 64u) | seed;
    next();
  }

  std::uint64_t next() {
    state_ = state_ * mult() + inc_;
    const auto hi = static_cast<std::uint64_t>(state_ >> 64u);
    const auto lo = static_cast<std::uint64_t>(state_);
    const std::uint64_t xored = hi ^ lo;
    const unsigned rot = static_cast<unsigned>(state_ >> 122u);
    return (xored >> rot) | (xored << ((-rot) & 63u));
  }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next() >> 11u) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t threshold = (-n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  using u128 = unsigned __int128;
  static constexpr u128 mult() {
    return (static_cast<u128>(2549297995355413924ULL) << 64u) | 4865540595714422341ULL;
  }
  u128 state_ = 0;
  u128 inc_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ssm
