#pragma once

#include "plmm/model.hpp"
#include "plmm/random.hpp"
#include "plmm/types.hpp"

#include <cstdint>
#include <limits>

namespace plmm {

struct SyntheticSpec {
  Index width = 128;
  Index height = 64;
  Index bands = 413;
  Index endmembers = 3;
  double cvar_top = 0.1;     // rows [0, height/2)
  double cvar_bottom = 0.25; // rows [height/2, height)
  double snr_db = 30.0;      // +inf disables the noise
  bool pure_pixels = true;
  double max_abundance = 0.8;  // rejection cap when pure_pixels is false
  std::uint64_t seed = 0;
  Matrix reference;  // L x K; empty selects builtin_endmembers

  void validate() const;
};

struct GroundTruth {
  HsiMatrix Y;
  PlmmState truth;
  double noise_sigma = 0.0;
};

/// Smooth non-negative spectra (baseline plus Gaussian bumps), fixed for given L, K.
Matrix builtin_endmembers(Index bands, Index endmembers);

/// Per-pixel variability coefficient: cvar_top on the upper half, cvar_bottom below.
Vector cvar_map(const SyntheticSpec& spec);

/// Knot position from U ~ N(0,1), clamped to [2, L-1] (1-based band index).
Index break_band(Index L, double u);

/// Two-segment linear curve through (1, xi1), (lbreak, xi2), (L, xi3).
Vector piecewise_affine_curve(Index L, Index lbreak, double xi1, double xi2, double xi3);

/// Draws xi_i ~ U[1 - c/2, 1 + c/2] and the knot, then builds the curve.
Vector piecewise_affine_factor(Index L, double cvar, Rng& rng);

GroundTruth generate(const SyntheticSpec& spec);

}  // namespace plmm
