#include "plmm/penalties.hpp"

namespace plmm {

SmoothnessOperator::SmoothnessOperator(Index width, Index height)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) throw ShapeError("smoothness operator needs width, height >= 1");
  const Index N = width * height;
  H_.resize(N, 4 * N);
  cA_ = Vector::Zero(N);
  neighbors_.assign(static_cast<std::size_t>(N), {});

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(8 * N));

  // Block order: left, right, up, down. A missing neighbour leaves the
  // column empty (zero padding at the borders, no wrap-around).
  for (Index i = 0; i < height; ++i) {
    for (Index j = 0; j < width; ++j) {
      const Index n = i * width + j;
      const Index nb[4] = {
          j > 0 ? n - 1 : -1,
          j + 1 < width ? n + 1 : -1,
          i > 0 ? n - width : -1,
          i + 1 < height ? n + width : -1,
      };
      for (Index k = 0; k < 4; ++k) {
        if (nb[k] < 0) continue;
        const Index col = n + k * N;
        triplets.emplace_back(n, col, 1.0);
        triplets.emplace_back(nb[k], col, -1.0);
        cA_[n] += 1.0;
        neighbors_[static_cast<std::size_t>(n)].push_back({nb[k], -1.0});
      }
    }
  }
  H_.setFromTriplets(triplets.begin(), triplets.end());
  H_.makeCompressed();
}

SmoothnessTerms smoothness_terms(const SmoothnessOperator& op, const Matrix& A, Index n) {
  require_shape(A.cols() == op.pixels(), "smoothness_terms: A has wrong pixel count");
  require_shape(n >= 0 && n < op.pixels(), "smoothness_terms: pixel index out of range");
  SmoothnessTerms out;
  out.cA = op.quadratic_coeff(n);
  out.c = Vector::Zero(A.rows());
  for (const auto& nb : op.neighbors(n)) out.c += nb.coeff * A.col(nb.pixel);
  return out;
}

double phi_value(const SmoothnessOperator& op, const Matrix& A) {
  require_shape(A.cols() == op.pixels(), "phi: A has wrong pixel count");
  const Matrix AH = A * op.H();
  return 0.5 * AH.squaredNorm();
}

Matrix phi_gradient(const SmoothnessOperator& op, const Matrix& A) {
  require_shape(A.cols() == op.pixels(), "phi: A has wrong pixel count");
  const Matrix AH = A * op.H();
  return AH * op.H().transpose();
}

double psi_dist_value(const Matrix& M, const Matrix& M0) {
  require_shape(M.rows() == M0.rows() && M.cols() == M0.cols(), "psi_dist: M0 shape mismatch");
  return 0.5 * (M - M0).squaredNorm();
}

Matrix psi_dist_gradient(const Matrix& M, const Matrix& M0) {
  require_shape(M.rows() == M0.rows() && M.cols() == M0.cols(), "psi_dist: M0 shape mismatch");
  return M - M0;
}

Matrix mutual_dist_generator(Index K, Index k) {
  Matrix G = -Matrix::Identity(K, K);
  G.row(k).array() += 1.0;
  return G;
}

Matrix mutual_dist_gram(Index K) {
  return 2.0 * (static_cast<double>(K) * Matrix::Identity(K, K) - Matrix::Ones(K, K));
}

double psi_mutual_value(const Matrix& M) {
  // Column j of M G_k is m_k - m_j.
  double total = 0.0;
  for (Index k = 0; k < M.cols(); ++k)
    for (Index j = 0; j < M.cols(); ++j)
      if (j != k) total += (M.col(k) - M.col(j)).squaredNorm();
  return 0.5 * total;
}

std::vector<Matrix> upsilon_gradient(const std::vector<Matrix>& dM) { return dM; }

Matrix psi_mutual_gradient(const Matrix& M) { return M * mutual_dist_gram(M.cols()); }

double upsilon_value(const std::vector<Matrix>& dM) {
  double total = 0.0;
  for (const auto& d : dM) total += d.squaredNorm();
  return 0.5 * total;
}

}  // namespace plmm
