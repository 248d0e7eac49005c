#pragma once

#include "plmm/model.hpp"
#include "plmm/types.hpp"

#include <vector>

namespace plmm {

/// Affine (K-1)-dimensional principal subspace of the data.
struct PcaFrame {
  Matrix U;            // L x (K-1), orthonormal columns
  Matrix V;            // (K-1) x L, V = U^T
  Vector ybar;         // data mean
  Matrix Z;            // V * [ybar | ... | ybar], (K-1) x K
  Vector eigenvalues;  // scatter eigenvalues, descending

  Index bands() const { return U.rows(); }
  Index endmembers() const { return U.cols() + 1; }

  /// T = V (M - ybar 1^T)
  Matrix project(const Matrix& M) const;
  /// M = U T + ybar 1^T
  Matrix lift(const Matrix& T) const;
};

/// PCA of the centered data through the eigendecomposition of the L x L
/// scatter matrix. Each direction's first non-negligible coordinate is made
/// positive.
PcaFrame fit_projection(const Matrix& Y, Index K);
inline PcaFrame fit_projection(const HsiMatrix& Y, Index K) { return fit_projection(Y.data, K); }

double factorial(Index n);

/// det([T; 1^T]) for T of shape (K-1) x K.
double simplex_det(const Matrix& T);
/// |det([T; 1^T])| / (K-1)!
double simplex_volume(const Matrix& T);
/// 1/2 V(T)^2
double volume_psi(const Matrix& T);

/// Cofactor vector f_k of row k of [T; 1^T], so that det = t_k f_k.
Vector volume_cofactor(const Matrix& T, Index k);
/// d psi / d t_k = (t_k f_k) f_k^T / (K-1)!^2
RowVector volume_psi_row_gradient(const Matrix& T, Index k);

/// Bounds on the entries of row k of T that keep the lifted endmembers
/// non-negative, the other rows being held fixed.
struct RowBounds {
  RowVector lower;     // t_k^-  (may be -inf)
  RowVector upper;     // t_k^+  (may be +inf)
  Matrix pixel_lower;  // N x K, bounds on t_kr for M + dM_n >= 0
  Matrix pixel_upper;
  Index dropped = 0;   // per-pixel intervals found empty and relaxed
};

struct VolumeContext {
  Matrix T;
  Matrix cofactors;  // (K-1) x K, row k is f_k^T
  std::vector<RowBounds> rows;
  std::vector<std::vector<Index>> positive_set;  // U_k^+
  std::vector<std::vector<Index>> negative_set;  // U_k^-
  bool with_variability = false;
};

enum class EmptyIntervalPolicy { Throw, Relax };

constexpr double kBoundWidening = 1e-9;
constexpr double kDirectionZero = 1e-12;

/// Bounds for one row. When `dM` is non-null the per-pixel bounds enforce
/// M + dM_n >= 0 exactly; otherwise the per-pixel blocks are empty.
RowBounds row_bounds(const PcaFrame& frame, const Matrix& T, Index k,
                     const std::vector<Matrix>* dM = nullptr,
                     EmptyIntervalPolicy pixel_policy = EmptyIntervalPolicy::Throw);

VolumeContext positivity_bounds(const PcaFrame& frame, const Matrix& T,
                                const std::vector<Matrix>* dM = nullptr,
                                EmptyIntervalPolicy pixel_policy = EmptyIntervalPolicy::Throw);

/// Stacked constraint values, 2(N+1) x K:
///   [x - t_k^-; -x + t_k^+; x - t_{n,k}^- (n = 1..N); -x + t_{n,k}^+ (n = 1..N)].
/// Without variability only the first two rows are produced. Unbounded sides
/// evaluate to +inf. Feasible iff every entry is >= 0.
Matrix g_constraint(const VolumeContext& ctx, Index k, const RowVector& t_row);

}  // namespace plmm
