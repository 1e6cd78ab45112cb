#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pairloc::rng {

/// SplitMix64 finalizer. Bijective on 64-bit words; the standard constants.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Sign-to-unsigned zigzag so that small negative coordinates hash well.
inline constexpr std::uint64_t zigzag(std::int64_t v) {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

/// Collision-resistant key for a (seed, a, b, c) tuple. Feeding each word
/// through the finalizer keeps distinct tuples on distinct streams.
inline constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a,
                                          std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

/// Uniform double strictly inside (0,1) from a 64-bit word.
inline double uniform_open(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Counter-free sequential generator for path simulation.
class SequentialRng {
  public:
    explicit SequentialRng(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() { return uniform_open(next_u64()); }

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  private:
    std::uint64_t state_;
};

inline double cauchy_from_u64(std::uint64_t h, double scale) {
    return scale * std::tan(std::numbers::pi * (uniform_open(h) - 0.5));
}

inline double gaussian_from_u64(std::uint64_t h, double sigma) {
    // Box-Muller on two decorrelated words derived from h.
    const double u1 = uniform_open(mix64(h ^ 0x243f6a8885a308d3ULL));
    const double u2 = uniform_open(mix64(h ^ 0x13198a2e03707344ULL));
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pairloc::rng
