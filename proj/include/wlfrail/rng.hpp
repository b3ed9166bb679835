#pragma once

#include <cstdint>
#include <random>

namespace wlfrail {

/// Deterministic random source. The engine (mt19937_64) is fully specified
/// by the standard and all variate transforms are implemented here, so a
/// given seed produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// U[0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// U(0, 1): never returns 0, safe for -log(u).
  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  /// Gamma(shape, scale) via Marsaglia-Tsang, with the usual power boost
  /// for shape < 1.
  double gamma(double shape, double scale);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Derives an independent stream seed from a base seed and a stream index
/// (splitmix64 finalizer). Used for per-replicate seeding.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace wlfrail
