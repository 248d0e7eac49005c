#include "plmm/init.hpp"

#include "plmm/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace plmm {

namespace {

// Leading d eigenvectors of S (descending eigenvalues).
Matrix leading_eigenvectors(const Matrix& S, Index d) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  if (eig.info() != Eigen::Success) throw NumericError("vca: eigensolver failed");
  const Index L = S.rows();
  Matrix U(L, d);
  for (Index i = 0; i < d; ++i) U.col(i) = eig.eigenvectors().col(L - 1 - i);
  return U;
}

}  // namespace

std::vector<Index> vca_indices(const Matrix& Y, Index K, std::uint64_t seed) {
  const Index L = Y.rows(), N = Y.cols();
  if (K < 2) throw ConfigError("vca: K must be >= 2");
  if (N < K) throw ShapeError("vca: need at least K pixels");
  if (L < K) throw DegenerateError("vca: fewer bands than endmembers");
  if (!Y.allFinite()) throw NumericError("vca: non-finite data");

  const double dN = static_cast<double>(N);
  const Vector ybar = Y.rowwise().mean();
  const Matrix centered = Y.colwise() - ybar;

  // SNR estimate from the K-dimensional principal subspace.
  const Matrix Ud = leading_eigenvectors(centered * centered.transpose() / dN, K);
  const Matrix xp = Ud.transpose() * centered;
  const double p_y = Y.squaredNorm() / dN;
  const double p_x = xp.squaredNorm() / dN + ybar.squaredNorm();
  const double snr_th = 15.0 + 10.0 * std::log10(static_cast<double>(K));
  double snr = std::numeric_limits<double>::infinity();
  if (p_y - p_x > 0.0) {
    const double num = p_x - static_cast<double>(K) / static_cast<double>(L) * p_y;
    snr = num > 0.0 ? 10.0 * std::log10(num / (p_y - p_x)) : -std::numeric_limits<double>::infinity();
  }

  Matrix proj(K, N);
  if (snr < snr_th) {
    // Low SNR: (K-1)-dimensional projection plus a constant coordinate.
    const Matrix x = xp.topRows(K - 1);
    const double c = x.colwise().norm().maxCoeff();
    proj.topRows(K - 1) = x;
    proj.row(K - 1).setConstant(c);
  } else {
    const Matrix U = leading_eigenvectors(Y * Y.transpose() / dN, K);
    const Matrix x = U.transpose() * Y;
    const Vector u = x.rowwise().mean();
    const RowVector scale = u.transpose() * x;
    for (Index n = 0; n < N; ++n) {
      if (!(std::abs(scale[n]) > 0.0)) throw DegenerateError("vca: pixel orthogonal to the data mean");
      proj.col(n) = x.col(n) / scale[n];
    }
  }

  Rng rng(seed);
  Matrix E = Matrix::Zero(K, K);
  E(K - 1, 0) = 1.0;
  std::vector<Index> picked;
  for (Index i = 0; i < K; ++i) {
    Vector w(K);
    for (Index j = 0; j < K; ++j) w[j] = rng.normal();
    const Matrix pinv = E.completeOrthogonalDecomposition().pseudoInverse();
    Vector f = w - E * (pinv * w);
    const double fn = f.norm();
    if (!(fn > 1e-12 * w.norm())) throw DegenerateError("vca: projection direction collapsed");
    f /= fn;
    const RowVector v = f.transpose() * proj;
    Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (std::find(picked.begin(), picked.end(), idx) != picked.end()) {
      std::ostringstream msg;
      msg << "vca: pixel " << idx << " selected twice; data has fewer than " << K << " vertices";
      throw DegenerateError(msg.str());
    }
    picked.push_back(idx);
    E.col(i) = proj.col(idx);
  }
  return picked;
}

Matrix vca(const Matrix& Y, Index K, std::uint64_t seed) {
  const std::vector<Index> idx = vca_indices(Y, K, seed);
  Matrix M(Y.rows(), K);
  for (Index k = 0; k < K; ++k) M.col(k) = Y.col(idx[static_cast<std::size_t>(k)]);
  return M;
}

AdmmConfig fcls_config() {
  AdmmConfig c;
  c.eps_abs = 1e-10;
  c.eps_rel = 1e-10;
  c.rho0_A = 1.0;
  c.max_inner_iters = 20000;
  return c;
}

Matrix fcls(const Matrix& Y, const Matrix& M, const AdmmConfig& cfg) {
  require_shape(Y.rows() == M.rows(), "fcls: band count mismatch");
  cfg.validate();
  const Index N = Y.cols(), K = M.cols();
  const std::vector<Matrix> zero(static_cast<std::size_t>(N), Matrix::Zero(M.rows(), K));
  const Matrix A0 = Matrix::Constant(K, N, 1.0 / static_cast<double>(K));
  return update_abundances(Y, M, zero, A0, nullptr, 0.0, cfg);
}

PlmmState initialize(const HsiMatrix& Y, Index K, const InitOptions& opts) {
  PlmmState s;
  s.M = vca(Y.data, K, opts.seed);
  s.A = fcls(Y.data, s.M, opts.fcls);
  s.dM = constant_variability(Y.bands(), K, Y.pixels(), opts.dm_init_value);
  return s;
}

}  // namespace plmm
