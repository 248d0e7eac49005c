#include "plmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace plmm {

double spectral_angle_deg(const Vector& a, const Vector& b) {
  require_shape(a.size() == b.size(), "spectral angle: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0 && nb > 0.0)) throw NumericError("spectral angle undefined for a zero spectrum");
  // Same angle as acos of the cosine, but accurate near 0 and 180 degrees.
  const Vector ua = a / na, ub = b / nb;
  return 2.0 * std::atan2((ua - ub).norm(), (ua + ub).norm()) * 180.0 / std::numbers::pi;
}

Permutation match_endmembers(const Matrix& M_true, const Matrix& M_est) {
  require_shape(M_true.rows() == M_est.rows() && M_true.cols() == M_est.cols(),
                "match_endmembers: shape mismatch");
  const Index K = M_true.cols();
  Matrix angle(K, K);
  for (Index i = 0; i < K; ++i)
    for (Index j = 0; j < K; ++j) angle(i, j) = spectral_angle_deg(M_true.col(i), M_est.col(j));

  Permutation perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), Index{0});
  if (K <= 8) {
    Permutation best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double cost = 0.0;
      for (Index k = 0; k < K; ++k) cost += angle(k, perm[static_cast<std::size_t>(k)]);
      if (cost < best_cost) {
        best_cost = cost;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }

  std::vector<bool> row_used(static_cast<std::size_t>(K)), col_used(static_cast<std::size_t>(K));
  for (Index step = 0; step < K; ++step) {
    double best = std::numeric_limits<double>::infinity();
    Index bi = -1, bj = -1;
    for (Index i = 0; i < K; ++i) {
      if (row_used[static_cast<std::size_t>(i)]) continue;
      for (Index j = 0; j < K; ++j) {
        if (col_used[static_cast<std::size_t>(j)] || !(angle(i, j) < best)) continue;
        best = angle(i, j);
        bi = i;
        bj = j;
      }
    }
    row_used[static_cast<std::size_t>(bi)] = true;
    col_used[static_cast<std::size_t>(bj)] = true;
    perm[static_cast<std::size_t>(bi)] = bj;
  }
  return perm;
}

PlmmState apply_permutation(const PlmmState& est, const Permutation& perm) {
  est.check_shapes();
  const Index K = est.endmembers();
  require_shape(static_cast<Index>(perm.size()) == K, "apply_permutation: wrong length");
  PlmmState out;
  out.M.resize(est.M.rows(), K);
  out.A.resize(K, est.A.cols());
  out.dM.assign(est.dM.size(), Matrix(est.M.rows(), K));
  for (Index k = 0; k < K; ++k) {
    const Index j = perm[static_cast<std::size_t>(k)];
    out.M.col(k) = est.M.col(j);
    out.A.row(k) = est.A.row(j);
    for (std::size_t n = 0; n < est.dM.size(); ++n) out.dM[n].col(k) = est.dM[n].col(j);
  }
  return out;
}

double asam(const Matrix& M_true, const Matrix& M_est) {
  require_shape(M_true.rows() == M_est.rows() && M_true.cols() == M_est.cols(), "asam: shape mismatch");
  double sum = 0.0;
  for (Index k = 0; k < M_true.cols(); ++k) sum += spectral_angle_deg(M_true.col(k), M_est.col(k));
  return sum / static_cast<double>(M_true.cols());
}

double gmse_a(const Matrix& A_true, const Matrix& A_est) {
  require_shape(A_true.rows() == A_est.rows() && A_true.cols() == A_est.cols(), "gmse_a: shape mismatch");
  return (A_true - A_est).squaredNorm() / static_cast<double>(A_true.size());
}

double gmse_dm(const std::vector<Matrix>& dM_true, const std::vector<Matrix>& dM_est) {
  require_shape(dM_true.size() == dM_est.size() && !dM_true.empty(), "gmse_dm: pixel count mismatch");
  double sum = 0.0;
  for (std::size_t n = 0; n < dM_true.size(); ++n) {
    require_shape(dM_true[n].rows() == dM_est[n].rows() && dM_true[n].cols() == dM_est[n].cols(),
                  "gmse_dm: shape mismatch");
    sum += (dM_true[n] - dM_est[n]).squaredNorm();
  }
  return sum / (static_cast<double>(dM_true.size()) * static_cast<double>(dM_true.front().size()));
}

double re(const Matrix& Y, const Matrix& Y_hat) {
  require_shape(Y.rows() == Y_hat.rows() && Y.cols() == Y_hat.cols(), "re: shape mismatch");
  return (Y - Y_hat).squaredNorm() / static_cast<double>(Y.size());
}

EvalReport evaluate(const Matrix& Y, const PlmmState& truth, const PlmmState& estimate) {
  truth.check_shapes();
  estimate.check_shapes();
  require_shape(truth.bands() == estimate.bands() && truth.endmembers() == estimate.endmembers() &&
                    truth.pixels() == estimate.pixels(),
                "evaluate: truth and estimate dimensions differ");
  EvalReport r;
  r.permutation = match_endmembers(truth.M, estimate.M);
  const PlmmState est = apply_permutation(estimate, r.permutation);
  r.asam_deg = asam(truth.M, est.M);
  r.gmse_a = gmse_a(truth.A, est.A);
  r.gmse_dm = gmse_dm(truth.dM, est.dM);
  r.re = re(Y, reconstruct(est));
  return r;
}

Matrix variability_energy(const std::vector<Matrix>& dM) {
  require_shape(!dM.empty(), "variability_energy: empty stack");
  const Index L = dM.front().rows(), K = dM.front().cols();
  const double s = 1.0 / std::sqrt(static_cast<double>(L));
  Matrix E(K, static_cast<Index>(dM.size()));
  for (std::size_t n = 0; n < dM.size(); ++n) {
    require_shape(dM[n].rows() == L && dM[n].cols() == K, "variability_energy: shape mismatch");
    E.col(static_cast<Index>(n)) = s * dM[n].colwise().norm().transpose();
  }
  return E;
}

}  // namespace plmm
