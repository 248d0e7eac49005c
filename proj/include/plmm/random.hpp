#pragma once

#include <cstdint>
#include <random>

namespace plmm {

/// Platform-independent random stream. std::mt19937_64 output is fixed by the
/// standard, but the std distributions are not, so the conversions live here.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : Rng(seed, 0, 0) {}
  /// Independent substream keyed by (seed, a, b), e.g. (seed, pixel, purpose).
  Rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

  std::uint64_t bits() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal, Box-Muller.
  double normal();
  /// Standard exponential.
  double exponential();

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace plmm
