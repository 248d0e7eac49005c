#pragma once

#include "plmm/types.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace plmm {

/// Finite-difference operator H = [H_left | H_right | H_up | H_down]
/// (N x 4N) over a width x height pixel grid, with per-pixel coefficients
/// cached for the abundance solver.
///
/// Column n + k*N of H holds +1 at row n and -1 at the row of the k-th
/// neighbour of n; it is empty when that neighbour falls outside the grid.
class SmoothnessOperator {
public:
  struct Neighbor {
    Index pixel;
    double coeff;  // sum_k h_{n,n+kN} h_{i,n+kN}
  };

  SmoothnessOperator(Index width, Index height);

  Index width() const { return width_; }
  Index height() const { return height_; }
  Index pixels() const { return width_ * height_; }

  const Eigen::SparseMatrix<double>& H() const { return H_; }

  /// cA_n = sum_{k=0..3} h_{n,n+kN}^2, i.e. the number of in-grid neighbours.
  double quadratic_coeff(Index n) const { return cA_[n]; }
  const std::vector<Neighbor>& neighbors(Index n) const { return neighbors_[n]; }

private:
  Index width_;
  Index height_;
  Eigen::SparseMatrix<double> H_;
  Vector cA_;
  std::vector<std::vector<Neighbor>> neighbors_;
};

struct SmoothnessTerms {
  double cA = 0.0;
  Vector c;  // sum over neighbours of coeff * a_i
};

/// Coefficients of phi(a_n) = cA_n ||a_n||^2 + 2 c_n^T a_n + const given the
/// current abundances of the other pixels.
SmoothnessTerms smoothness_terms(const SmoothnessOperator& op, const Matrix& A, Index n);

/// Phi(A) = 1/2 ||A H||_F^2.
double phi_value(const SmoothnessOperator& op, const Matrix& A);
Matrix phi_gradient(const SmoothnessOperator& op, const Matrix& A);

/// 1/2 ||M - M0||_F^2
double psi_dist_value(const Matrix& M, const Matrix& M0);
Matrix psi_dist_gradient(const Matrix& M, const Matrix& M0);

/// G_k = -I_K + e_k 1_K^T.
Matrix mutual_dist_generator(Index K, Index k);

/// S_G = sum_k G_k G_k^T = 2 (K I_K - 1 1^T).
Matrix mutual_dist_gram(Index K);

/// 1/2 sum_k ||M G_k||_F^2, i.e. 1/2 sum_i sum_{j != i} ||m_i - m_j||^2.
double psi_mutual_value(const Matrix& M);
Matrix psi_mutual_gradient(const Matrix& M);

/// 1/2 sum_n ||dM_n||_F^2
double upsilon_value(const std::vector<Matrix>& dM);
/// Gradient w.r.t. each dM_n, which is dM_n itself.
std::vector<Matrix> upsilon_gradient(const std::vector<Matrix>& dM);

}  // namespace plmm
