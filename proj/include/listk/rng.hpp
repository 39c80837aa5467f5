#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace listk {

/// Deterministic PRNG wrapper. The mt19937_64 engine is fully specified by
/// the C++ standard, but the standard *distributions* and std::shuffle are
/// not, so every draw we depend on for reproducibility is implemented here
/// explicitly. Fixed seed => identical draws on any platform/compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n) via rejection sampling (no modulo bias).
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded: n must be > 0");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (one value per call; the pair's second
  /// half is cached to keep draw counts predictable).
  double next_gaussian() {
    if (has_cached_gaussian_) {
      has_cached_gaussian_ = false;
      return cached_gaussian_;
    }
    double u1, u2;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_gaussian_ = r * std::sin(theta);
    has_cached_gaussian_ = true;
    return r * std::cos(theta);
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("Rng::sample_indices: k > n");
    // Partial Fisher-Yates over an index table: k swaps, k draws.
    std::vector<std::size_t> table(n);
    for (std::size_t i = 0; i < n; ++i) table[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(bounded(n - i));
      std::swap(table[i], table[j]);
      out.push_back(table[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

/// Stateless 64-bit mixer (splitmix64 finalizer); used to derive independent
/// per-document noise streams from (seed, id) without shared state.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for trial `index` of a simulation with the given master seed.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) {
  return master_seed ^ index;
}

}  // namespace listk
