#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "sparsetest/errors.hpp"

namespace sparsetest {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Derives an independent substream seed from (master, index).  Generation
// keyed this way is order-independent: row i of a dataset depends only on
// (master seed, i), never on how many rows were drawn before it.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
  return detail::mix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

// SplitMix64 engine.  All distribution conversions are implemented here so
// that output is bit-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return detail::mix64(state_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool coin() { return (next_u64() >> 63) != 0; }

  double rademacher() { return coin() ? 1.0 : -1.0; }

  // Box-Muller (cosine branch).  One normal per call, two uniforms consumed.
  double gaussian() {
    double u1 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Poisson by CDF inversion; rates above the chunk limit are drawn as sums
  // of independent pieces so the running pmf never underflows.
  std::uint64_t poisson(double rate) {
    if (rate < 0.0) throw DomainError("poisson rate must be nonnegative");
    if (rate == 0.0) return 0;
    constexpr double kChunk = 500.0;
    std::uint64_t total = 0;
    while (rate > kChunk) {
      total += poisson_small(kChunk);
      rate -= kChunk;
    }
    return total + poisson_small(rate);
  }

  std::uint64_t index(std::uint64_t size) {
    // size is tiny in all callers; the modulo bias is < size / 2^64.
    return next_u64() % size;
  }

 private:
  std::uint64_t poisson_small(double rate) {
    const double u = uniform01();
    double p = std::exp(-rate);
    double cum = p;
    std::uint64_t k = 0;
    while (u >= cum && k < 400000) {
      ++k;
      p *= rate / static_cast<double>(k);
      cum += p;
    }
    return k;
  }

  std::uint64_t state_;
};

}  // namespace sparsetest
