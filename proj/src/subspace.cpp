#include "plmm/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace plmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Returns false when the interval stays empty after widening.
bool widen_if_needed(double& lo, double& hi) {
  if (lo <= hi) return true;
  lo -= kBoundWidening;
  hi += kBoundWidening;
  return lo <= hi;
}

}  // namespace

Matrix PcaFrame::project(const Matrix& M) const {
  require_shape(M.rows() == bands(), "project: band count mismatch");
  return V * (M.colwise() - ybar);
}

Matrix PcaFrame::lift(const Matrix& T) const {
  require_shape(T.rows() == U.cols(), "lift: T must have K-1 rows");
  return (U * T).colwise() + ybar;
}

PcaFrame fit_projection(const Matrix& Y, Index K) {
  if (K < 2) throw ConfigError("fit_projection: K must be >= 2");
  if (Y.cols() < K) throw ShapeError("fit_projection: need at least K pixels");
  if (Y.rows() < K - 1) throw DegenerateError("fit_projection: fewer bands than K-1");

  PcaFrame frame;
  frame.ybar = Y.rowwise().mean();
  const Matrix centered = Y.colwise() - frame.ybar;
  const Matrix scatter = centered * centered.transpose();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
  if (eig.info() != Eigen::Success) throw NumericError("fit_projection: eigensolver failed");

  const Index L = Y.rows();
  frame.eigenvalues = eig.eigenvalues().reverse();
  const double top = std::max(frame.eigenvalues[0], 0.0);
  const double kth = frame.eigenvalues[K - 2];
  if (!(kth > 1e-12 * top) || top <= 0.0) {
    std::ostringstream msg;
    msg << "fit_projection: data spans fewer than K-1 = " << (K - 1) << " directions";
    throw DegenerateError(msg.str());
  }

  frame.U.resize(L, K - 1);
  for (Index d = 0; d < K - 1; ++d) {
    Vector u = eig.eigenvectors().col(L - 1 - d);
    for (Index l = 0; l < L; ++l) {
      if (std::abs(u[l]) > kDirectionZero) {
        if (u[l] < 0) u = -u;
        break;
      }
    }
    frame.U.col(d) = u;
  }
  frame.V = frame.U.transpose();
  frame.Z = (frame.V * frame.ybar).replicate(1, K);
  return frame;
}

double factorial(Index n) {
  double f = 1.0;
  for (Index i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

namespace {

Matrix augmented(const Matrix& T) {
  Matrix X(T.rows() + 1, T.cols());
  X.topRows(T.rows()) = T;
  X.row(T.rows()).setOnes();
  return X;
}

void check_simplex_shape(const Matrix& T) {
  require_shape(T.cols() >= 2 && T.rows() == T.cols() - 1, "volume: T must be (K-1) x K");
}

}  // namespace

double simplex_det(const Matrix& T) {
  check_simplex_shape(T);
  return augmented(T).fullPivLu().determinant();
}

double simplex_volume(const Matrix& T) {
  return std::abs(simplex_det(T)) / factorial(T.cols() - 1);
}

double volume_psi(const Matrix& T) {
  const double v = simplex_volume(T);
  return 0.5 * v * v;
}

Vector volume_cofactor(const Matrix& T, Index k) {
  check_simplex_shape(T);
  const Index K = T.cols();
  require_shape(k >= 0 && k < K - 1, "volume_cofactor: row index out of range");
  const Matrix X = augmented(T);
  Vector f(K);
  Matrix minor(K - 1, K - 1);
  for (Index j = 0; j < K; ++j) {
    Index mi = 0;
    for (Index i = 0; i < K; ++i) {
      if (i == k) continue;
      Index mj = 0;
      for (Index c = 0; c < K; ++c) {
        if (c == j) continue;
        minor(mi, mj++) = X(i, c);
      }
      ++mi;
    }
    const double sign = ((k + j) % 2 == 0) ? 1.0 : -1.0;
    f[j] = sign * minor.fullPivLu().determinant();
  }
  return f;
}

RowVector volume_psi_row_gradient(const Matrix& T, Index k) {
  const Vector f = volume_cofactor(T, k);
  const double c = factorial(T.cols() - 1);
  const double det = T.row(k).dot(f);
  return (det / (c * c)) * f.transpose();
}

RowBounds row_bounds(const PcaFrame& frame, const Matrix& T, Index k, const std::vector<Matrix>* dM,
                     EmptyIntervalPolicy pixel_policy) {
  const Index K = frame.endmembers();
  const Index L = frame.bands();
  require_shape(T.rows() == K - 1 && T.cols() == K, "row_bounds: T must be (K-1) x K");
  require_shape(k >= 0 && k < K - 1, "row_bounds: row index out of range");

  const Vector uk = frame.U.col(k);
  // base(l, r) = ybar_l + sum_{j != k} u_lj t_jr
  const Matrix base = frame.lift(T) - uk * T.row(k);

  RowBounds out;
  out.lower = RowVector::Constant(K, -kInf);
  out.upper = RowVector::Constant(K, kInf);

  auto fold = [&](Index l, double b, double& lo, double& hi) {
    const double u = uk[l];
    if (u > kDirectionZero) {
      lo = std::max(lo, -b / u);
    } else if (u < -kDirectionZero) {
      hi = std::min(hi, -b / u);
    }
  };

  for (Index r = 0; r < K; ++r) {
    for (Index l = 0; l < L; ++l) fold(l, base(l, r), out.lower[r], out.upper[r]);
    if (!widen_if_needed(out.lower[r], out.upper[r])) {
      std::ostringstream msg;
      msg << "positivity bounds infeasible for row " << k << ", column " << r << ": ["
          << out.lower[r] << ", " << out.upper[r] << "]";
      throw InfeasibleBoundsError(msg.str());
    }
  }

  if (dM == nullptr) {
    out.pixel_lower.resize(0, K);
    out.pixel_upper.resize(0, K);
    return out;
  }

  const Index N = static_cast<Index>(dM->size());
  out.pixel_lower = Matrix::Constant(N, K, -kInf);
  out.pixel_upper = Matrix::Constant(N, K, kInf);
  for (Index n = 0; n < N; ++n) {
    const Matrix& d = (*dM)[static_cast<std::size_t>(n)];
    require_shape(d.rows() == L && d.cols() == K, "row_bounds: dM_n shape mismatch");
    for (Index r = 0; r < K; ++r) {
      double lo = -kInf, hi = kInf;
      for (Index l = 0; l < L; ++l) fold(l, base(l, r) + d(l, r), lo, hi);
      if (!widen_if_needed(lo, hi)) {
        if (pixel_policy == EmptyIntervalPolicy::Throw) {
          std::ostringstream msg;
          msg << "positivity bounds infeasible for pixel " << n << ", row " << k << ", column "
              << r;
          throw InfeasibleBoundsError(msg.str());
        }
        lo = -kInf;
        hi = kInf;
        ++out.dropped;
      }
      out.pixel_lower(n, r) = lo;
      out.pixel_upper(n, r) = hi;
    }
  }
  return out;
}

VolumeContext positivity_bounds(const PcaFrame& frame, const Matrix& T,
                                const std::vector<Matrix>* dM, EmptyIntervalPolicy pixel_policy) {
  const Index K = frame.endmembers();
  require_shape(T.rows() == K - 1 && T.cols() == K, "positivity_bounds: T must be (K-1) x K");
  VolumeContext ctx;
  ctx.T = T;
  ctx.with_variability = dM != nullptr;
  ctx.cofactors.resize(K - 1, K);
  ctx.positive_set.resize(static_cast<std::size_t>(K - 1));
  ctx.negative_set.resize(static_cast<std::size_t>(K - 1));
  for (Index k = 0; k < K - 1; ++k) {
    ctx.cofactors.row(k) = volume_cofactor(T, k).transpose();
    for (Index l = 0; l < frame.bands(); ++l) {
      const double u = frame.U(l, k);
      if (u > kDirectionZero) ctx.positive_set[static_cast<std::size_t>(k)].push_back(l);
      if (u < -kDirectionZero) ctx.negative_set[static_cast<std::size_t>(k)].push_back(l);
    }
    ctx.rows.push_back(row_bounds(frame, T, k, dM, pixel_policy));
  }
  return ctx;
}

Matrix g_constraint(const VolumeContext& ctx, Index k, const RowVector& t_row) {
  require_shape(k >= 0 && k < static_cast<Index>(ctx.rows.size()), "g_constraint: bad row index");
  const RowBounds& b = ctx.rows[static_cast<std::size_t>(k)];
  const Index K = b.lower.size();
  require_shape(t_row.size() == K, "g_constraint: row length mismatch");
  const Index N = b.pixel_lower.rows();
  Matrix g(2 * (N + 1), K);
  g.row(0) = t_row - b.lower;
  g.row(1) = b.upper - t_row;
  for (Index n = 0; n < N; ++n) {
    g.row(2 + n) = t_row - b.pixel_lower.row(n);
    g.row(2 + N + n) = b.pixel_upper.row(n) - t_row;
  }
  return g;
}

}  // namespace plmm
