#pragma once

#include "plmm/model.hpp"
#include "plmm/penalties.hpp"
#include "plmm/subspace.hpp"
#include "plmm/types.hpp"

#include <vector>

namespace plmm {

// ---------------------------------------------------------------------------
// Scaffolding shared by every sub-solver.
// ---------------------------------------------------------------------------

/// Scaled-dual ADMM parameters. Defaults are the synthetic-data settings.
struct AdmmConfig {
  double eps_abs = 1e-1;
  double eps_rel = 1e-4;
  double tau_incr = 1.1;
  double tau_decr = 1.1;
  double mu = 10.0;
  double rho0_A = 1e-4;
  double rho0_M = 1e-8;
  double rho0_dM = 1e-4;
  int max_inner_iters = 100;
  int max_rho_updates = 50;

  static AdmmConfig synthetic() { return {}; }
  static AdmmConfig real() {
    AdmmConfig c;
    c.eps_abs = 1e-2;
    return c;
  }

  /// tau = 1 is accepted and disables the penalty adaptation.
  void validate() const;
};

enum class Termination { Converged, MaxIters };

struct AdmmIterate {
  double r_norm;
  double s_norm;
  double eps_pri;
  double eps_dual;
  double rho;
};

struct AdmmTrace {
  std::vector<AdmmIterate> iterations;  // filled only when recording
  int iterations_run = 0;
  int rho_updates = 0;
  Termination termination = Termination::MaxIters;
};

struct Residuals {
  double r_norm = 0.0;
  double s_norm = 0.0;
  double eps_pri = 0.0;
  double eps_dual = 0.0;

  bool converged() const { return r_norm <= eps_pri && s_norm <= eps_dual; }
};

/// Residuals and stopping thresholds for min f(x) + g(z) s.t. Ax + Bz = c
/// with scaled dual u (unscaled dual y = rho u):
///   r = Ax + Bz - c,   s = rho A^T B (z - z_prev),
///   eps_pri  = sqrt(p) eps_abs + eps_rel max(||Ax||, ||Bz||, ||c||),  p = rows(A)
///   eps_dual = sqrt(n) eps_abs + eps_rel ||A^T y||,                   n = cols(A)
Residuals admm_residuals(const Vector& x, const Vector& z, const Vector& z_prev, const Matrix& A,
                         const Matrix& B, const Vector& c, double rho, const Vector& u,
                         double eps_abs, double eps_rel);

/// Three-branch penalty update: tau_incr * rho if ||r|| > mu ||s||,
/// rho / tau_decr if ||s|| > mu ||r||, rho otherwise.
double adjust_rho(double rho, double r_norm, double s_norm, const AdmmConfig& cfg);

/// adjust_rho with a budget of at most `max_rho_updates` effective changes.
class RhoSchedule {
public:
  RhoSchedule(double rho0, const AdmmConfig& cfg);
  double rho() const { return rho_; }
  int updates() const { return updates_; }
  /// Applies the rule and returns rho_new / rho_old.
  double step(double r_norm, double s_norm);

private:
  double rho_;
  int updates_ = 0;
  const AdmmConfig& cfg_;
};

/// Aggregated counters over many independent sub-problem solves.
struct SubsolverStats {
  long long solves = 0;
  long long iterations = 0;
  long long converged = 0;
  int max_iterations = 0;

  void add(const AdmmTrace& t);
  void merge(const SubsolverStats& other);
};

// ---------------------------------------------------------------------------
// Abundance sub-problem (one pixel):
//   min_a 1/2 ||y - B a||^2 + 1/2 quad ||a||^2 + lin^T a
//   s.t. a >= 0, 1^T a = 1,   split as Q a + R w = s with
//   Q = [I; 1^T], R = [-I; 0^T], s = [0; 1].
// ---------------------------------------------------------------------------

struct AbundanceSubproblem {
  Matrix B;  // M + dM_n
  Vector y;
  double quad = 0.0;  // 2 alpha cA_n
  Vector lin;         // 2 alpha c_n, may be empty for alpha = 0
};

/// Closed-form minimiser of the scaled augmented Lagrangian in a.
Vector abundance_primal(const AbundanceSubproblem& p, const Vector& w, const Vector& lambda,
                        double rho);
/// max(a + lambda_{1:K}, 0)
Vector abundance_split(const Vector& a, const Vector& lambda);

struct AbundanceSolve {
  Vector a;
  Vector w;
  Vector lambda;  // K + 1, scaled
  AdmmTrace trace;
};

AbundanceSolve solve_abundance_pixel(const AbundanceSubproblem& p, const AdmmConfig& cfg,
                                     double rho0, bool record = false);

// ---------------------------------------------------------------------------
// Endmember sub-problem, one band l (None / DistToRef / MutualDist):
//   min_m 1/2 ||y_l - m A - delta_l||^2 + beta psi(m)
//   s.t. e m - W + F = 0, W >= 0,  e = 1_{N+1}, F = [0; dm_{1,l}; ...; dm_{N,l}].
// ---------------------------------------------------------------------------

struct EndmemberRowSubproblem {
  RowVector rhs;  // (y_l - delta_l) A^T + beta m0_l
  Matrix gram;    // A A^T + beta * P, P in {0, I, S_G}
  Matrix F;       // (N + 1) x K
};

RowVector endmember_row_primal(const EndmemberRowSubproblem& p, const Matrix& W,
                               const Matrix& Lambda, double rho);
/// max(e m + F + Lambda, 0)
Matrix endmember_row_split(const RowVector& m, const Matrix& F, const Matrix& Lambda);

struct EndmemberRowSolve {
  RowVector m;
  Matrix W;
  Matrix Lambda;
  AdmmTrace trace;
};

EndmemberRowSolve solve_endmember_row(const EndmemberRowSubproblem& p, const AdmmConfig& cfg,
                                      double rho0, bool record = false);

// ---------------------------------------------------------------------------
// Volume sub-problem, one row k of T:
//   min_x 1/2 ||b_k - x A||^2 + beta / (2 (K-1)!^2) (x f_k)^2  s.t. g_k(x) >= 0.
// Constraint entry (i, p) reads sign_i * x_p + offset(i, p); entries whose
// bound is infinite are inactive.
// ---------------------------------------------------------------------------

struct VolumeRowSubproblem {
  RowVector rhs;  // b_k A^T
  Matrix gram;    // A A^T + beta / (K-1)!^2 f_k f_k^T
  Vector sign;    // R
  Matrix offset;  // R x K
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> active;  // R x K

  /// Builds the 2(N+1) constraint rows from the bounds of one row of T.
  static VolumeRowSubproblem from_bounds(RowVector rhs, Matrix gram, const RowBounds& bounds);
};

RowVector volume_row_primal(const VolumeRowSubproblem& p, const Matrix& W, const Matrix& Lambda,
                            double rho);
/// max(g(x) + Lambda, 0) on active entries, 0 elsewhere.
Matrix volume_row_split(const VolumeRowSubproblem& p, const RowVector& x, const Matrix& Lambda);

struct VolumeRowSolve {
  RowVector x;
  Matrix W;
  Matrix Lambda;
  AdmmTrace trace;
};

VolumeRowSolve solve_volume_row(const VolumeRowSubproblem& p, const AdmmConfig& cfg, double rho0,
                                bool record = false);

// ---------------------------------------------------------------------------
// Variability sub-problem (one pixel):
//   min_D 1/2 ||y - (M + D) a||^2 + gamma/2 ||D||^2  s.t. M + D = W, W >= 0.
// ---------------------------------------------------------------------------

struct VariabilitySubproblem {
  Vector y;
  Matrix M;
  Vector a;
  double gamma = 0.0;
};

Matrix variability_primal(const VariabilitySubproblem& p, const Matrix& W, const Matrix& Lambda,
                          double rho);
/// max(D + M + Lambda, 0)
Matrix variability_split(const Matrix& D, const Matrix& M, const Matrix& Lambda);

struct VariabilitySolve {
  Matrix D;
  Matrix W;
  Matrix Lambda;
  AdmmTrace trace;
};

VariabilitySolve solve_variability_pixel(const VariabilitySubproblem& p, const AdmmConfig& cfg,
                                         double rho0, bool record = false);

// ---------------------------------------------------------------------------
// Block updates and the outer loop.
// ---------------------------------------------------------------------------

/// GaussSeidel uses the freshest neighbour abundances within a sweep; Jacobi
/// freezes them at the start of the sweep.
enum class SweepOrder { GaussSeidel, Jacobi };

/// One ADMM solve per pixel. `op` may be null when alpha == 0.
Matrix update_abundances(const Matrix& Y, const Matrix& M, const std::vector<Matrix>& dM,
                         const Matrix& A, const SmoothnessOperator* op, double alpha,
                         const AdmmConfig& cfg, SweepOrder order = SweepOrder::GaussSeidel,
                         SubsolverStats* stats = nullptr);

struct EndmemberStepInfo {
  SubsolverStats stats;
  Index relaxed_pixel_bounds = 0;  // volume variant only
};

/// Dispatches on penalty.psi; uses penalty.beta, penalty.reference and
/// penalty.frame. beta = 0 gives the unpenalised update.
Matrix update_endmembers(const Matrix& Y, const Matrix& A, const std::vector<Matrix>& dM,
                         const Matrix& M, const PenaltyConfig& penalty, const AdmmConfig& cfg,
                         EndmemberStepInfo* info = nullptr);

std::vector<Matrix> update_variability(const Matrix& Y, const Matrix& M, const Matrix& A,
                                       const std::vector<Matrix>& dM, double gamma,
                                       const AdmmConfig& cfg, SubsolverStats* stats = nullptr);

struct BcdConfig {
  PenaltyConfig penalty;
  AdmmConfig admm;
  double outer_tol = 1e-3;
  int max_outer_iters = 100;
  SweepOrder sweep = SweepOrder::GaussSeidel;

  void validate() const;
};

constexpr double kMonotoneSlack = 1e-8;
/// Lower bound on |J| in the relative-change stopping test.
constexpr double kObjectiveFloor = 1e-12;

struct UnmixResult {
  PlmmState state;
  std::vector<ObjectiveTerms> trace;  // trace[0] is the initial point
  std::vector<bool> increased;        // per outer iteration, J rose by more than the slack
  bool converged = false;
  int iterations = 0;
  SubsolverStats abundance_stats;
  SubsolverStats endmember_stats;
  SubsolverStats variability_stats;
  Index relaxed_pixel_bounds = 0;
};

/// Block coordinate descent over A, M, dM until the relative change of the
/// objective drops below outer_tol.
UnmixResult unmix(const HsiMatrix& Y, PlmmState init, const BcdConfig& cfg);

}  // namespace plmm
