#pragma once

#include "plmm/types.hpp"

#include <memory>
#include <vector>

namespace plmm {

class SmoothnessOperator;
struct PcaFrame;

/// Observation matrix: L bands x N pixels. Pixel (row i, col j) of the
/// width x height grid is column i * width + j.
struct HsiMatrix {
  Matrix data;
  Index width = 0;
  Index height = 0;

  HsiMatrix() = default;
  HsiMatrix(Matrix y, Index w, Index h);

  Index bands() const { return data.rows(); }
  Index pixels() const { return data.cols(); }
};

/// Endmembers M (L x K), abundances A (K x N) and one L x K perturbation
/// matrix per pixel.
struct PlmmState {
  Matrix M;
  Matrix A;
  std::vector<Matrix> dM;

  Index bands() const { return M.rows(); }
  Index endmembers() const { return M.cols(); }
  Index pixels() const { return A.cols(); }

  /// Throws ShapeError unless M, A and every dM_n agree on (L, K, N).
  void check_shapes() const;
};

/// A state with dM_n filled with `value` everywhere.
std::vector<Matrix> constant_variability(Index bands, Index endmembers, Index pixels,
                                         double value);

enum class PsiKind { None, DistToRef, MutualDist, Volume };

const char* to_string(PsiKind kind);
PsiKind psi_kind_from_string(const std::string& name);

struct PenaltyConfig {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  PsiKind psi = PsiKind::None;
  Matrix reference;  // M0, used by DistToRef
  std::shared_ptr<const SmoothnessOperator> smoothness;
  std::shared_ptr<const PcaFrame> frame;  // used by Volume

  void validate(Index bands, Index endmembers) const;
};

/// Per-term breakdown of the objective. Penalty values are unweighted.
struct ObjectiveTerms {
  double data = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double upsilon = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  double total() const { return data + alpha * phi + beta * psi + gamma * upsilon; }
};

/// Y_hat with column n equal to (M + dM_n) a_n.
Matrix reconstruct(const PlmmState& state);

/// 1/2 ||Y - Y_hat||_F^2.
double data_term(const Matrix& Y, const PlmmState& state);

ObjectiveTerms objective_terms(const HsiMatrix& Y, const PlmmState& state,
                               const PenaltyConfig& cfg);

inline double objective(const HsiMatrix& Y, const PlmmState& state, const PenaltyConfig& cfg) {
  return objective_terms(Y, state, cfg).total();
}

}  // namespace plmm
