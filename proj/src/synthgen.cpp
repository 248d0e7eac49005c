#include "plmm/synthgen.hpp"

#include <algorithm>
#include <cmath>

namespace plmm {

namespace {

// Substream purposes.
constexpr std::uint64_t kAbundanceStream = 1;
constexpr std::uint64_t kCurveStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kPurePixelStream = 4;

Vector dirichlet_one(Index K, Rng& rng) {
  Vector a(K);
  for (Index k = 0; k < K; ++k) a[k] = rng.exponential();
  return a / a.sum();
}

}  // namespace

void SyntheticSpec::validate() const {
  if (width < 1 || height < 1) throw ConfigError("synth: width and height must be >= 1");
  if (bands < 3) throw ConfigError("synth: need at least 3 bands");
  if (endmembers < 2) throw ConfigError("synth: need at least 2 endmembers");
  if (!(cvar_top >= 0 && cvar_bottom >= 0)) throw ConfigError("synth: c_var must be >= 0");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw ConfigError("synth: snr_db must be a number or +inf");
  if (!pure_pixels && !(max_abundance > 1.0 / static_cast<double>(endmembers) && max_abundance <= 1.0))
    throw ConfigError("synth: max_abundance must lie in (1/K, 1]");
  if (pure_pixels && width * height < endmembers) throw ConfigError("synth: fewer pixels than endmembers");
  if (reference.size() > 0) {
    require_shape(reference.rows() == bands && reference.cols() == endmembers,
                  "synth: reference endmembers must be L x K");
    if ((reference.array() < 0.0).any() || !reference.allFinite())
      throw ConfigError("synth: reference endmembers must be finite and non-negative");
  }
}

Matrix builtin_endmembers(Index bands, Index endmembers) {
  Matrix M(bands, endmembers);
  const double L = static_cast<double>(bands);
  for (Index k = 0; k < endmembers; ++k) {
    // Two bumps per material at positions spread over the band range.
    const double c1 = (0.15 + 0.7 * static_cast<double>(k) / static_cast<double>(endmembers)) * L;
    const double c2 = std::fmod(c1 + 0.45 * L, L);
    const double w1 = (0.06 + 0.02 * static_cast<double>(k % 3)) * L;
    const double w2 = 0.1 * L;
    const double h1 = 0.6 - 0.1 * static_cast<double>(k % 4);
    const double h2 = 0.25 + 0.05 * static_cast<double>(k % 2);
    for (Index l = 0; l < bands; ++l) {
      const double x = static_cast<double>(l);
      M(l, k) = 0.05 + h1 * std::exp(-0.5 * std::pow((x - c1) / w1, 2)) +
                h2 * std::exp(-0.5 * std::pow((x - c2) / w2, 2));
    }
  }
  return M;
}

Vector cvar_map(const SyntheticSpec& spec) {
  Vector c(spec.width * spec.height);
  for (Index i = 0; i < spec.height; ++i)
    c.segment(i * spec.width, spec.width).setConstant(2 * i < spec.height ? spec.cvar_top : spec.cvar_bottom);
  return c;
}

Index break_band(Index L, double u) {
  const double Ld = static_cast<double>(L);
  const double raw = std::floor(Ld / 2.0 + std::floor(Ld * u / 3.0));
  return static_cast<Index>(std::clamp(raw, 2.0, Ld - 1.0));
}

Vector piecewise_affine_curve(Index L, Index lbreak, double xi1, double xi2, double xi3) {
  require_shape(L >= 3 && lbreak >= 2 && lbreak <= L - 1, "piecewise curve: bad knot");
  Vector f(L);
  for (Index b = 1; b <= L; ++b) {
    double v;
    if (b == 1) {
      v = xi1;
    } else if (b < lbreak) {
      const double t = static_cast<double>(b - 1) / static_cast<double>(lbreak - 1);
      v = xi1 + t * (xi2 - xi1);
    } else if (b == lbreak) {
      v = xi2;
    } else if (b < L) {
      const double t = static_cast<double>(b - lbreak) / static_cast<double>(L - lbreak);
      v = xi2 + t * (xi3 - xi2);
    } else {
      v = xi3;
    }
    f[b - 1] = v;
  }
  return f;
}

Vector piecewise_affine_factor(Index L, double cvar, Rng& rng) {
  if (L < 3) throw ConfigError("piecewise curve needs L >= 3");
  const double lo = 1.0 - cvar / 2.0, hi = 1.0 + cvar / 2.0;
  const double xi1 = rng.uniform(lo, hi);
  const double xi2 = rng.uniform(lo, hi);
  const double xi3 = rng.uniform(lo, hi);
  const Index lbreak = break_band(L, rng.normal());
  return piecewise_affine_curve(L, lbreak, xi1, xi2, xi3);
}

GroundTruth generate(const SyntheticSpec& spec) {
  spec.validate();
  const Index L = spec.bands, K = spec.endmembers, N = spec.width * spec.height;
  const Matrix M = spec.reference.size() > 0 ? spec.reference : builtin_endmembers(L, K);
  const Vector cvar = cvar_map(spec);

  Matrix A(K, N);
  for (Index n = 0; n < N; ++n) {
    Rng rng(spec.seed, static_cast<std::uint64_t>(n), kAbundanceStream);
    Vector a = dirichlet_one(K, rng);
    if (!spec.pure_pixels)
      while (a.maxCoeff() > spec.max_abundance) a = dirichlet_one(K, rng);
    A.col(n) = a;
  }
  if (spec.pure_pixels) {
    // Distinct pixels by partial Fisher-Yates.
    Rng rng(spec.seed, 0, kPurePixelStream);
    std::vector<Index> order(static_cast<std::size_t>(N));
    for (Index n = 0; n < N; ++n) order[static_cast<std::size_t>(n)] = n;
    for (Index k = 0; k < K; ++k) {
      const auto span = static_cast<std::uint64_t>(N - k);
      const Index j = k + static_cast<Index>(rng.bits() % span);
      std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(j)]);
      A.col(order[static_cast<std::size_t>(k)]) = Vector::Unit(K, k);
    }
  }

  std::vector<Matrix> dM(static_cast<std::size_t>(N), Matrix::Zero(L, K));
  for (Index n = 0; n < N; ++n) {
    Rng rng(spec.seed, static_cast<std::uint64_t>(n), kCurveStream);
    Matrix& d = dM[static_cast<std::size_t>(n)];
    for (Index k = 0; k < K; ++k) {
      const Vector f = piecewise_affine_factor(L, cvar[n], rng);
      d.col(k) = (f.array() - 1.0) * M.col(k).array();
    }
  }

  PlmmState truth{M, A, std::move(dM)};
  Matrix X = reconstruct(truth);
  double sigma = 0.0;
  if (std::isfinite(spec.snr_db)) {
    const double power = X.squaredNorm() / (static_cast<double>(L * N) * std::pow(10.0, spec.snr_db / 10.0));
    sigma = std::sqrt(power);
    for (Index n = 0; n < N; ++n) {
      Rng rng(spec.seed, static_cast<std::uint64_t>(n), kNoiseStream);
      for (Index l = 0; l < L; ++l) X(l, n) += sigma * rng.normal();
    }
  }
  return GroundTruth{HsiMatrix(std::move(X), spec.width, spec.height), std::move(truth), sigma};
}

}  // namespace plmm
