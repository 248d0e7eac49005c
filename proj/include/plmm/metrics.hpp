#pragma once

#include "plmm/model.hpp"
#include "plmm/types.hpp"

#include <vector>

namespace plmm {

/// perm[k] is the estimated column matched to true column k.
using Permutation = std::vector<Index>;

/// Angle in degrees between two spectra. Throws NumericError on a zero vector.
double spectral_angle_deg(const Vector& a, const Vector& b);

/// Permutation minimising the summed spectral angle: exhaustive for K <= 8,
/// greedy on the smallest remaining angle otherwise.
Permutation match_endmembers(const Matrix& M_true, const Matrix& M_est);

/// Reorders the estimate so column / row k corresponds to true endmember k.
PlmmState apply_permutation(const PlmmState& est, const Permutation& perm);

/// Mean per-endmember spectral angle in degrees (columns already matched).
double asam(const Matrix& M_true, const Matrix& M_est);
/// ||A - A_hat||^2 / (K N)
double gmse_a(const Matrix& A_true, const Matrix& A_est);
/// sum_n ||dM_n - dM_hat_n||^2 / (N L K)
double gmse_dm(const std::vector<Matrix>& dM_true, const std::vector<Matrix>& dM_est);
/// ||Y - Y_hat||^2 / (L N)
double re(const Matrix& Y, const Matrix& Y_hat);

struct EvalReport {
  double asam_deg = 0.0;
  double gmse_a = 0.0;
  double gmse_dm = 0.0;
  double re = 0.0;
  Permutation permutation;
};

/// Matches endmembers, then computes every metric on the reordered estimate.
EvalReport evaluate(const Matrix& Y, const PlmmState& truth, const PlmmState& estimate);

/// (1/sqrt(L)) ||dm_{n,k}||, K x N.
Matrix variability_energy(const std::vector<Matrix>& dM);

}  // namespace plmm
