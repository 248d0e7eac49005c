#include "plmm/admm.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace plmm {

void AdmmConfig::validate() const {
  if (!(eps_abs > 0 && eps_rel >= 0)) throw ConfigError("ADMM tolerances must be positive");
  if (!(tau_incr >= 1 && tau_decr >= 1)) throw ConfigError("tau_incr and tau_decr must be >= 1");
  if (!(mu > 1)) throw ConfigError("mu must be > 1");
  if (!(rho0_A > 0 && rho0_M > 0 && rho0_dM > 0)) throw ConfigError("initial rho must be > 0");
  if (max_inner_iters < 1) throw ConfigError("max_inner_iters must be >= 1");
  if (max_rho_updates < 0) throw ConfigError("max_rho_updates must be >= 0");
}

Residuals admm_residuals(const Vector& x, const Vector& z, const Vector& z_prev, const Matrix& A,
                         const Matrix& B, const Vector& c, double rho, const Vector& u,
                         double eps_abs, double eps_rel) {
  require_shape(A.cols() == x.size() && B.cols() == z.size() && z_prev.size() == z.size(),
                "admm_residuals: operand sizes");
  require_shape(A.rows() == B.rows() && A.rows() == c.size() && u.size() == c.size(),
                "admm_residuals: constraint sizes");
  const Vector Ax = A * x;
  const Vector Bz = B * z;
  Residuals res;
  res.r_norm = (Ax + Bz - c).norm();
  res.s_norm = (rho * A.transpose() * (B * (z - z_prev))).norm();
  const double p = static_cast<double>(A.rows());
  const double n = static_cast<double>(A.cols());
  res.eps_pri = std::sqrt(p) * eps_abs + eps_rel * std::max({Ax.norm(), Bz.norm(), c.norm()});
  res.eps_dual = std::sqrt(n) * eps_abs + eps_rel * (A.transpose() * (rho * u)).norm();
  return res;
}

double adjust_rho(double rho, double r_norm, double s_norm, const AdmmConfig& cfg) {
  if (r_norm > cfg.mu * s_norm) return cfg.tau_incr * rho;
  if (s_norm > cfg.mu * r_norm) return rho / cfg.tau_decr;
  return rho;
}

RhoSchedule::RhoSchedule(double rho0, const AdmmConfig& cfg) : rho_(rho0), cfg_(cfg) {}

double RhoSchedule::step(double r_norm, double s_norm) {
  if (updates_ >= cfg_.max_rho_updates) return 1.0;
  const double next = adjust_rho(rho_, r_norm, s_norm, cfg_);
  if (next == rho_) return 1.0;
  const double factor = next / rho_;
  rho_ = next;
  ++updates_;
  return factor;
}

void SubsolverStats::add(const AdmmTrace& t) {
  ++solves;
  iterations += t.iterations_run;
  if (t.termination == Termination::Converged) ++converged;
  max_iterations = std::max(max_iterations, t.iterations_run);
}

void SubsolverStats::merge(const SubsolverStats& o) {
  solves += o.solves;
  iterations += o.iterations;
  converged += o.converged;
  max_iterations = std::max(max_iterations, o.max_iterations);
}

namespace {

// Shared loop: primal step, splitting step, dual step, residual test, then
// penalty adaptation with the scaled dual rescaled by rho_old / rho_new.
template <class Step>
AdmmTrace run_admm(Step& step, const AdmmConfig& cfg, double rho0, bool record) {
  RhoSchedule schedule(rho0, cfg);
  AdmmTrace trace;
  for (int it = 0; it < cfg.max_inner_iters; ++it) {
    const double rho = schedule.rho();
    step.iterate(rho);
    const Residuals res = step.residuals(rho, cfg);
    trace.iterations_run = it + 1;
    if (record) trace.iterations.push_back({res.r_norm, res.s_norm, res.eps_pri, res.eps_dual, rho});
    if (res.converged()) {
      trace.termination = Termination::Converged;
      break;
    }
    const double factor = schedule.step(res.r_norm, res.s_norm);
    if (factor != 1.0) step.rescale_dual(1.0 / factor);
  }
  trace.rho_updates = schedule.updates();
  return trace;
}

}  // namespace

// ----------------------------- abundances ---------------------------------

namespace {

Matrix abundance_system(const Matrix& BtB, double quad, double rho) {
  Matrix H = BtB;
  H.diagonal().array() += quad + rho;
  H.array() += rho;  // rho Q^T Q = rho (I + 1 1^T)
  return H;
}

Vector abundance_rhs(const Vector& Bty, const Vector& lin, const Vector& w, const Vector& lambda,
                     double rho) {
  const Index K = Bty.size();
  // Q^T (s - R w - lambda) with s - R w - lambda = [w - lambda_{1:K}; 1 - lambda_{K+1}]
  Vector v = w - lambda.head(K);
  v.array() += 1.0 - lambda[K];
  Vector rhs = Bty + rho * v;
  if (lin.size() == K) rhs -= lin;
  return rhs;
}

struct AbundanceStep {
  const AbundanceSubproblem& p;
  Matrix BtB;
  Vector Bty;
  Vector a, w, w_prev, lambda;
  double factored_rho = -1.0;
  Eigen::LLT<Matrix> llt;

  explicit AbundanceStep(const AbundanceSubproblem& prob) : p(prob) {
    const Index K = p.B.cols();
    BtB = p.B.transpose() * p.B;
    Bty = p.B.transpose() * p.y;
    a = Vector::Zero(K);
    w = Vector::Zero(K);
    lambda = Vector::Zero(K + 1);
  }

  void iterate(double rho) {
    if (rho != factored_rho) {
      llt.compute(abundance_system(BtB, p.quad, rho));
      if (llt.info() != Eigen::Success) throw NumericError("abundance system not positive definite");
      factored_rho = rho;
    }
    a = llt.solve(abundance_rhs(Bty, p.lin, w, lambda, rho));
    w_prev = w;
    w = abundance_split(a, lambda);
    const Index K = a.size();
    lambda.head(K) += a - w;
    lambda[K] += a.sum() - 1.0;
  }

  Residuals residuals(double rho, const AdmmConfig& cfg) const {
    const Index K = a.size();
    Residuals r;
    const double sum_gap = a.sum() - 1.0;
    r.r_norm = std::sqrt((a - w).squaredNorm() + sum_gap * sum_gap);
    r.s_norm = rho * (w - w_prev).norm();
    const double Qa = std::sqrt(a.squaredNorm() + a.sum() * a.sum());
    r.eps_pri = std::sqrt(static_cast<double>(K + 1)) * cfg.eps_abs +
                cfg.eps_rel * std::max({Qa, w.norm(), 1.0});
    const Vector Qt_lambda = lambda.head(K).array() + lambda[K];
    r.eps_dual = std::sqrt(static_cast<double>(K)) * cfg.eps_abs + cfg.eps_rel * rho * Qt_lambda.norm();
    return r;
  }

  void rescale_dual(double s) { lambda *= s; }
};

}  // namespace

Vector abundance_primal(const AbundanceSubproblem& p, const Vector& w, const Vector& lambda,
                        double rho) {
  const Index K = p.B.cols();
  require_shape(p.y.size() == p.B.rows() && w.size() == K && lambda.size() == K + 1,
                "abundance_primal: sizes");
  const Matrix H = abundance_system(p.B.transpose() * p.B, p.quad, rho);
  return H.llt().solve(abundance_rhs(p.B.transpose() * p.y, p.lin, w, lambda, rho));
}

Vector abundance_split(const Vector& a, const Vector& lambda) {
  return (a + lambda.head(a.size())).cwiseMax(0.0);
}

AbundanceSolve solve_abundance_pixel(const AbundanceSubproblem& p, const AdmmConfig& cfg,
                                     double rho0, bool record) {
  require_shape(p.y.size() == p.B.rows(), "abundance sub-problem: y / B mismatch");
  if (!p.B.allFinite() || !p.y.allFinite()) throw NumericError("abundance sub-problem: non-finite input");
  AbundanceStep step(p);
  AbundanceSolve out;
  out.trace = run_admm(step, cfg, rho0, record);
  out.a = std::move(step.a);
  out.w = std::move(step.w);
  out.lambda = std::move(step.lambda);
  return out;
}

Matrix update_abundances(const Matrix& Y, const Matrix& M, const std::vector<Matrix>& dM,
                         const Matrix& A, const SmoothnessOperator* op, double alpha,
                         const AdmmConfig& cfg, SweepOrder order, SubsolverStats* stats) {
  const Index N = Y.cols(), K = M.cols();
  require_shape(M.rows() == Y.rows() && A.rows() == K && A.cols() == N, "update_abundances: shapes");
  require_shape(static_cast<Index>(dM.size()) == N, "update_abundances: dM size");
  if (alpha < 0) throw ConfigError("alpha must be non-negative");
  if (alpha > 0 && (op == nullptr || op->pixels() != N))
    throw ConfigError("update_abundances: smoothness operator missing or mis-sized");

  Matrix out = A;
  const Matrix& neighbours = order == SweepOrder::GaussSeidel ? out : A;
  AbundanceSubproblem p;
  for (Index n = 0; n < N; ++n) {
    p.B = M + dM[static_cast<std::size_t>(n)];
    p.y = Y.col(n);
    if (alpha > 0) {
      // Phi restricted to a_n is cA_n ||a_n||^2 + 2 c_n^T a_n + const.
      const SmoothnessTerms terms = smoothness_terms(*op, neighbours, n);
      p.quad = 2.0 * alpha * terms.cA;
      p.lin = 2.0 * alpha * terms.c;
    }
    const AbundanceSolve s = solve_abundance_pixel(p, cfg, cfg.rho0_A);
    out.col(n) = s.a;
    if (stats) stats->add(s.trace);
  }
  return out;
}

// ----------------------------- endmembers ---------------------------------

RowVector endmember_row_primal(const EndmemberRowSubproblem& p, const Matrix& W,
                               const Matrix& Lambda, double rho) {
  const Index K = p.gram.rows();
  const Index rows = p.F.rows();
  require_shape(W.rows() == rows && W.cols() == K && Lambda.rows() == rows && Lambda.cols() == K,
                "endmember_row_primal: sizes");
  Matrix H = p.gram;
  H.diagonal().array() += rho * static_cast<double>(rows);
  const RowVector rhs = p.rhs + rho * (W - p.F - Lambda).colwise().sum();
  return H.ldlt().solve(rhs.transpose()).transpose();
}

Matrix endmember_row_split(const RowVector& m, const Matrix& F, const Matrix& Lambda) {
  return (F + Lambda).rowwise().operator+(m).cwiseMax(0.0);
}

namespace {

struct EndmemberRowStep {
  const EndmemberRowSubproblem& p;
  RowVector m;
  Matrix W, W_prev, Lambda;
  double factored_rho = -1.0;
  Eigen::LDLT<Matrix> ldlt;

  explicit EndmemberRowStep(const EndmemberRowSubproblem& prob) : p(prob) {
    const Index K = p.gram.rows();
    m = RowVector::Zero(K);
    W = Matrix::Zero(p.F.rows(), K);
    Lambda = Matrix::Zero(p.F.rows(), K);
  }

  void iterate(double rho) {
    if (rho != factored_rho) {
      Matrix H = p.gram;
      H.diagonal().array() += rho * static_cast<double>(p.F.rows());
      ldlt.compute(H);
      factored_rho = rho;
    }
    const RowVector rhs = p.rhs + rho * (W - p.F - Lambda).colwise().sum();
    m = ldlt.solve(rhs.transpose()).transpose();
    W_prev.swap(W);
    W = endmember_row_split(m, p.F, Lambda);
    Lambda += (p.F - W).rowwise() + m;
  }

  Residuals residuals(double rho, const AdmmConfig& cfg) const {
    const double rows = static_cast<double>(p.F.rows());
    const double K = static_cast<double>(m.size());
    Residuals r;
    r.r_norm = ((p.F - W).rowwise() + m).norm();
    r.s_norm = rho * (W - W_prev).colwise().sum().norm();
    r.eps_pri = std::sqrt(rows * K) * cfg.eps_abs +
                cfg.eps_rel * std::max({std::sqrt(rows) * m.norm(), W.norm(), p.F.norm()});
    r.eps_dual = std::sqrt(K) * cfg.eps_abs + cfg.eps_rel * rho * Lambda.colwise().sum().norm();
    return r;
  }

  void rescale_dual(double s) { Lambda *= s; }
};

}  // namespace

EndmemberRowSolve solve_endmember_row(const EndmemberRowSubproblem& p, const AdmmConfig& cfg,
                                      double rho0, bool record) {
  require_shape(p.gram.rows() == p.gram.cols() && p.rhs.size() == p.gram.rows() &&
                    p.F.cols() == p.gram.rows(),
                "endmember sub-problem: sizes");
  EndmemberRowStep step(p);
  EndmemberRowSolve out;
  out.trace = run_admm(step, cfg, rho0, record);
  out.m = std::move(step.m);
  out.W = std::move(step.W);
  out.Lambda = std::move(step.Lambda);
  return out;
}

// ------------------------------- volume -----------------------------------

VolumeRowSubproblem VolumeRowSubproblem::from_bounds(RowVector rhs, Matrix gram,
                                                     const RowBounds& b) {
  const Index K = b.lower.size();
  const Index N = b.pixel_lower.rows();
  const Index R = 2 * (N + 1);
  VolumeRowSubproblem p;
  p.rhs = std::move(rhs);
  p.gram = std::move(gram);
  p.sign.resize(R);
  p.offset = Matrix::Zero(R, K);
  p.active.resize(R, K);

  auto set_row = [&](Index i, double sign, const RowVector& bound) {
    p.sign[i] = sign;
    for (Index c = 0; c < K; ++c) {
      const bool finite = std::isfinite(bound[c]);
      p.active(i, c) = finite;
      // sign * x + offset: lower bound -> x - lo, upper bound -> -x + hi
      p.offset(i, c) = finite ? -sign * bound[c] : 0.0;
    }
  };
  set_row(0, 1.0, b.lower);
  set_row(1, -1.0, b.upper);
  for (Index n = 0; n < N; ++n) {
    set_row(2 + n, 1.0, b.pixel_lower.row(n));
    set_row(2 + N + n, -1.0, b.pixel_upper.row(n));
  }
  return p;
}

namespace {

Matrix constraint_values(const VolumeRowSubproblem& p, const RowVector& x) {
  Matrix g = p.offset;
  for (Index i = 0; i < g.rows(); ++i) g.row(i) += p.sign[i] * x;
  return p.active.select(g, 0.0);
}

Vector active_counts(const VolumeRowSubproblem& p) {
  return p.active.cast<double>().colwise().sum().transpose();
}

// sum_i sign_i X(i, :)
RowVector signed_column_sum(const VolumeRowSubproblem& p, const Matrix& X) {
  return (p.sign.asDiagonal() * X).colwise().sum();
}

}  // namespace

RowVector volume_row_primal(const VolumeRowSubproblem& p, const Matrix& W, const Matrix& Lambda,
                            double rho) {
  Matrix H = p.gram;
  H.diagonal() += rho * active_counts(p);
  const Matrix inner = p.active.select(p.offset - W + Lambda, 0.0);
  const RowVector rhs = p.rhs - rho * signed_column_sum(p, inner);
  return H.ldlt().solve(rhs.transpose()).transpose();
}

Matrix volume_row_split(const VolumeRowSubproblem& p, const RowVector& x, const Matrix& Lambda) {
  return p.active.select((constraint_values(p, x) + Lambda).cwiseMax(0.0), 0.0);
}

namespace {

struct VolumeRowStep {
  const VolumeRowSubproblem& p;
  Vector counts;
  RowVector x;
  Matrix W, W_prev, Lambda, g;
  double factored_rho = -1.0;
  Eigen::LDLT<Matrix> ldlt;

  explicit VolumeRowStep(const VolumeRowSubproblem& prob) : p(prob) {
    counts = active_counts(p);
    x = RowVector::Zero(p.gram.rows());
    W = Matrix::Zero(p.offset.rows(), p.offset.cols());
    Lambda = W;
  }

  void iterate(double rho) {
    if (rho != factored_rho) {
      Matrix H = p.gram;
      H.diagonal() += rho * counts;
      ldlt.compute(H);
      factored_rho = rho;
    }
    const Matrix inner = p.active.select(p.offset - W + Lambda, 0.0);
    const RowVector rhs = p.rhs - rho * signed_column_sum(p, inner);
    x = ldlt.solve(rhs.transpose()).transpose();
    g = constraint_values(p, x);
    W_prev.swap(W);
    W = p.active.select((g + Lambda).cwiseMax(0.0), 0.0);
    Lambda += g - W;
  }

  Residuals residuals(double rho, const AdmmConfig& cfg) const {
    const double P = counts.sum();
    const double K = static_cast<double>(x.size());
    const double Ax = std::sqrt((counts.array() * x.transpose().array().square()).sum());
    Residuals r;
    r.r_norm = (g - W).norm();
    r.s_norm = rho * signed_column_sum(p, W - W_prev).norm();
    r.eps_pri = std::sqrt(P) * cfg.eps_abs +
                cfg.eps_rel * std::max({Ax, W.norm(), p.active.select(p.offset, 0.0).norm()});
    r.eps_dual = std::sqrt(K) * cfg.eps_abs + cfg.eps_rel * rho * signed_column_sum(p, Lambda).norm();
    return r;
  }

  void rescale_dual(double s) { Lambda *= s; }
};

}  // namespace

VolumeRowSolve solve_volume_row(const VolumeRowSubproblem& p, const AdmmConfig& cfg, double rho0,
                                bool record) {
  require_shape(p.gram.rows() == p.gram.cols() && p.rhs.size() == p.gram.rows() &&
                    p.offset.cols() == p.gram.rows() && p.sign.size() == p.offset.rows() &&
                    p.active.rows() == p.offset.rows() && p.active.cols() == p.offset.cols(),
                "volume sub-problem: sizes");
  VolumeRowStep step(p);
  VolumeRowSolve out;
  out.trace = run_admm(step, cfg, rho0, record);
  out.x = std::move(step.x);
  out.W = std::move(step.W);
  out.Lambda = std::move(step.Lambda);
  return out;
}

namespace {

Matrix variability_product(const std::vector<Matrix>& dM, const Matrix& A) {
  Matrix delta(dM.front().rows(), A.cols());
  for (Index n = 0; n < A.cols(); ++n) delta.col(n) = dM[static_cast<std::size_t>(n)] * A.col(n);
  return delta;
}

// Moves T toward the origin of the frame (every endmember at the data mean)
// until the lifted endmembers are non-negative.
void restore_endmember_positivity(const PcaFrame& frame, Matrix& T) {
  const Matrix UT = frame.U * T;
  double scale = 1.0;
  for (Index r = 0; r < UT.cols(); ++r) {
    for (Index l = 0; l < UT.rows(); ++l) {
      const double v = frame.ybar[l] + UT(l, r);
      if (v < 0.0 && UT(l, r) < 0.0) scale = std::min(scale, std::max(frame.ybar[l], 0.0) / -UT(l, r));
    }
  }
  if (scale < 1.0) T *= scale;
}

Matrix update_endmembers_volume(const Matrix& Y, const Matrix& A, const std::vector<Matrix>& dM,
                                const Matrix& M, const PenaltyConfig& penalty,
                                const AdmmConfig& cfg, EndmemberStepInfo* info) {
  if (!penalty.frame) throw ConfigError("volume penalty needs a fitted PCA frame");
  const PcaFrame& frame = *penalty.frame;
  const Index K = M.cols();
  if (frame.endmembers() != K || frame.bands() != M.rows())
    throw ShapeError("PCA frame does not match the endmember matrix");

  Matrix T = frame.project(M);
  restore_endmember_positivity(frame, T);

  // With M = U T + ybar 1^T and U^T U = I, the data term in T is
  // 1/2 ||B - T A||^2 + const, B = V (Y - Delta - ybar 1^T A), separable over rows.
  const Matrix delta = variability_product(dM, A);
  const Matrix X = (Y - delta) - frame.ybar * A.colwise().sum();
  const Matrix B = frame.V * X;
  const Matrix AAt = A * A.transpose();
  const double c = factorial(K - 1);

  for (Index k = 0; k < K - 1; ++k) {
    const Vector f = volume_cofactor(T, k);
    const RowBounds bounds = row_bounds(frame, T, k, &dM, EmptyIntervalPolicy::Relax);
    Matrix gram = AAt;
    if (penalty.beta > 0) gram += (penalty.beta / (c * c)) * f * f.transpose();
    const VolumeRowSubproblem p =
        VolumeRowSubproblem::from_bounds(B.row(k) * A.transpose(), std::move(gram), bounds);
    const VolumeRowSolve s = solve_volume_row(p, cfg, cfg.rho0_M);
    // Keep M itself feasible so the next row's interval is non-empty.
    T.row(k) = s.x.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
    if (info) {
      info->stats.add(s.trace);
      info->relaxed_pixel_bounds += bounds.dropped;
    }
  }
  return frame.lift(T);
}

}  // namespace

Matrix update_endmembers(const Matrix& Y, const Matrix& A, const std::vector<Matrix>& dM,
                         const Matrix& M, const PenaltyConfig& penalty, const AdmmConfig& cfg,
                         EndmemberStepInfo* info) {
  const Index L = Y.rows(), N = Y.cols(), K = M.cols();
  require_shape(M.rows() == L && A.rows() == K && A.cols() == N, "update_endmembers: shapes");
  require_shape(static_cast<Index>(dM.size()) == N, "update_endmembers: dM size");
  if (penalty.beta < 0) throw ConfigError("beta must be non-negative");

  if (penalty.psi == PsiKind::Volume) return update_endmembers_volume(Y, A, dM, M, penalty, cfg, info);

  const Matrix target = Y - variability_product(dM, A);
  const Matrix TA = target * A.transpose();
  Matrix gram = A * A.transpose();
  Matrix rhs = TA;
  switch (penalty.psi) {
    case PsiKind::DistToRef:
      require_shape(penalty.reference.rows() == L && penalty.reference.cols() == K,
                    "reference endmembers must be L x K");
      gram.diagonal().array() += penalty.beta;
      rhs += penalty.beta * penalty.reference;
      break;
    case PsiKind::MutualDist: gram += penalty.beta * mutual_dist_gram(K); break;
    default: break;
  }

  Matrix out(L, K);
  EndmemberRowSubproblem p;
  p.gram = gram;
  p.F = Matrix::Zero(N + 1, K);
  for (Index l = 0; l < L; ++l) {
    p.rhs = rhs.row(l);
    for (Index n = 0; n < N; ++n) p.F.row(n + 1) = dM[static_cast<std::size_t>(n)].row(l);
    const EndmemberRowSolve s = solve_endmember_row(p, cfg, cfg.rho0_M);
    out.row(l) = s.m;
    if (info) info->stats.add(s.trace);
  }
  return out;
}

// ----------------------------- variability --------------------------------

Matrix variability_primal(const VariabilitySubproblem& p, const Matrix& W, const Matrix& Lambda,
                          double rho) {
  const Index K = p.M.cols();
  Matrix H = p.a * p.a.transpose();
  H.diagonal().array() += rho + p.gamma;
  const Matrix rhs = (p.y - p.M * p.a) * p.a.transpose() + rho * (W - p.M - Lambda);
  // D H = rhs, H symmetric
  return H.llt().solve(rhs.transpose()).transpose().eval().leftCols(K);
}

Matrix variability_split(const Matrix& D, const Matrix& M, const Matrix& Lambda) {
  return (D + M + Lambda).cwiseMax(0.0);
}

namespace {

struct VariabilityStep {
  const VariabilitySubproblem& p;
  Matrix residual_outer;  // (y - M a) a^T
  Matrix D, W, W_prev, Lambda;
  double factored_rho = -1.0;
  Eigen::LLT<Matrix> llt;

  explicit VariabilityStep(const VariabilitySubproblem& prob) : p(prob) {
    residual_outer = (p.y - p.M * p.a) * p.a.transpose();
    D = Matrix::Zero(p.M.rows(), p.M.cols());
    W = D;
    Lambda = D;
  }

  void iterate(double rho) {
    if (rho != factored_rho) {
      Matrix H = p.a * p.a.transpose();
      H.diagonal().array() += rho + p.gamma;
      llt.compute(H);
      if (llt.info() != Eigen::Success) throw NumericError("variability system not positive definite");
      factored_rho = rho;
    }
    const Matrix rhs = residual_outer + rho * (W - p.M - Lambda);
    D = llt.solve(rhs.transpose()).transpose();
    W_prev.swap(W);
    W = variability_split(D, p.M, Lambda);
    Lambda += D + p.M - W;
  }

  Residuals residuals(double rho, const AdmmConfig& cfg) const {
    const double dim = static_cast<double>(D.size());
    Residuals r;
    r.r_norm = (D + p.M - W).norm();
    r.s_norm = rho * (W - W_prev).norm();
    r.eps_pri = std::sqrt(dim) * cfg.eps_abs + cfg.eps_rel * std::max({D.norm(), W.norm(), p.M.norm()});
    r.eps_dual = std::sqrt(dim) * cfg.eps_abs + cfg.eps_rel * rho * Lambda.norm();
    return r;
  }

  void rescale_dual(double s) { Lambda *= s; }
};

}  // namespace

VariabilitySolve solve_variability_pixel(const VariabilitySubproblem& p, const AdmmConfig& cfg,
                                         double rho0, bool record) {
  require_shape(p.y.size() == p.M.rows() && p.a.size() == p.M.cols(), "variability sub-problem: sizes");
  if (p.gamma < 0) throw ConfigError("gamma must be non-negative");
  VariabilityStep step(p);
  VariabilitySolve out;
  out.trace = run_admm(step, cfg, rho0, record);
  out.D = std::move(step.D);
  out.W = std::move(step.W);
  out.Lambda = std::move(step.Lambda);
  return out;
}

std::vector<Matrix> update_variability(const Matrix& Y, const Matrix& M, const Matrix& A,
                                       const std::vector<Matrix>& dM, double gamma,
                                       const AdmmConfig& cfg, SubsolverStats* stats) {
  const Index N = Y.cols();
  require_shape(M.rows() == Y.rows() && A.rows() == M.cols() && A.cols() == N,
                "update_variability: shapes");
  require_shape(static_cast<Index>(dM.size()) == N, "update_variability: dM size");
  std::vector<Matrix> out(static_cast<std::size_t>(N));
  VariabilitySubproblem p;
  p.M = M;
  p.gamma = gamma;
  for (Index n = 0; n < N; ++n) {
    p.y = Y.col(n);
    p.a = A.col(n);
    VariabilitySolve s = solve_variability_pixel(p, cfg, cfg.rho0_dM);
    out[static_cast<std::size_t>(n)] = std::move(s.D);
    if (stats) stats->add(s.trace);
  }
  return out;
}

// ------------------------------ outer loop --------------------------------

void BcdConfig::validate() const {
  admm.validate();
  if (!(outer_tol > 0)) throw ConfigError("outer_tol must be > 0");
  if (max_outer_iters < 1) throw ConfigError("max_outer_iters must be >= 1");
}

UnmixResult unmix(const HsiMatrix& Y, PlmmState init, const BcdConfig& cfg) {
  cfg.validate();
  init.check_shapes();
  require_shape(init.bands() == Y.bands() && init.pixels() == Y.pixels(),
                "unmix: initial state does not match the data");

  PenaltyConfig pen = cfg.penalty;
  pen.validate(init.bands(), init.endmembers());
  if (pen.alpha > 0 && !pen.smoothness)
    pen.smoothness = std::make_shared<SmoothnessOperator>(Y.width, Y.height);
  if (pen.psi == PsiKind::Volume && !pen.frame)
    pen.frame = std::make_shared<PcaFrame>(fit_projection(Y.data, init.endmembers()));

  UnmixResult result;
  result.state = std::move(init);
  PlmmState& s = result.state;
  result.trace.push_back(objective_terms(Y, s, pen));

  for (int it = 1; it <= cfg.max_outer_iters; ++it) {
    s.A = update_abundances(Y.data, s.M, s.dM, s.A, pen.smoothness.get(), pen.alpha, cfg.admm,
                            cfg.sweep, &result.abundance_stats);
    EndmemberStepInfo info;
    s.M = update_endmembers(Y.data, s.A, s.dM, s.M, pen, cfg.admm, &info);
    result.endmember_stats.merge(info.stats);
    result.relaxed_pixel_bounds += info.relaxed_pixel_bounds;
    s.dM = update_variability(Y.data, s.M, s.A, s.dM, pen.gamma, cfg.admm, &result.variability_stats);

    const double previous = result.trace.back().total();
    result.trace.push_back(objective_terms(Y, s, pen));
    const double current = result.trace.back().total();
    result.increased.push_back(current > previous + kMonotoneSlack);
    result.iterations = it;

    // Floor keeps an exact fit (J = 0) from never converging.
    const double scale = std::max(std::abs(previous), kObjectiveFloor);
    if (std::abs(previous - current) / scale < cfg.outer_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace plmm
