#pragma once

// Seeded random streams.
//
// Every stream is a std::mt19937_64 whose output sequence is fixed by the C++
// standard. Conversions to doubles, bounded integers and exponentials are done
// here rather than through <random> distributions, whose algorithms are
// implementation-defined, so that traces reproduce across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace ccnet {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Labels for the disjoint stream families drawn from one user seed.
enum class Stream : std::uint64_t {
  code = 0x636f6465ULL,        // chunk choices and combination coefficients
  traffic = 0x74726166ULL,     // transmission times and losses
  message = 0x6d657373ULL,     // source payloads
  precode = 0x70726563ULL,     // precode generator
  matrix = 0x6d617478ULL,      // stand-alone matrix sampling
};

/// Seed of sub-stream `index` of family `label` under user seed `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, Stream label,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(base ^ mix64(static_cast<std::uint64_t>(label))) + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t base, Stream label, std::uint64_t index = 0)
      : engine_(derive_seed(base, label, index)) {}

  /// 64 independent fair bits.
  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform on {0, ..., n-1}; unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    if ((n & (n - 1)) == 0) return engine_() & (n - 1);
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return x % n;
    }
  }

  /// Exponential with the given rate.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ccnet
