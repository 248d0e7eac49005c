#include "plmm/random.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace plmm {

Rng::Rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto split = [](std::uint64_t v) {
    return std::array<std::uint32_t, 2>{static_cast<std::uint32_t>(v),
                                        static_cast<std::uint32_t>(v >> 32)};
  };
  const auto s = split(seed), x = split(a), y = split(b);
  std::seed_seq seq{s[0], s[1], x[0], x[1], y[0], y[1]};
  engine_.seed(seq);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Rng::exponential() {
  double u = uniform();
  while (u == 0.0) u = uniform();
  return -std::log(u);
}

}  // namespace plmm
