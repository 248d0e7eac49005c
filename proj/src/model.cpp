#include "plmm/model.hpp"

#include "plmm/penalties.hpp"
#include "plmm/subspace.hpp"

#include <sstream>

namespace plmm {

HsiMatrix::HsiMatrix(Matrix y, Index w, Index h) : data(std::move(y)), width(w), height(h) {
  if (data.rows() < 1) throw ShapeError("HsiMatrix: need at least one band");
  if (w < 1 || h < 1 || w * h != data.cols()) {
    std::ostringstream msg;
    msg << "HsiMatrix: " << w << " x " << h << " grid does not match " << data.cols() << " pixels";
    throw ShapeError(msg.str());
  }
  if (!data.allFinite()) throw NumericError("HsiMatrix: non-finite entries");
}

void PlmmState::check_shapes() const {
  const Index L = M.rows(), K = M.cols(), N = A.cols();
  require_shape(A.rows() == K, "state: A must have K rows");
  require_shape(static_cast<Index>(dM.size()) == N, "state: need one dM matrix per pixel");
  for (const auto& d : dM) require_shape(d.rows() == L && d.cols() == K, "state: dM_n must be L x K");
}

std::vector<Matrix> constant_variability(Index bands, Index endmembers, Index pixels,
                                         double value) {
  return std::vector<Matrix>(static_cast<std::size_t>(pixels),
                             Matrix::Constant(bands, endmembers, value));
}

const char* to_string(PsiKind kind) {
  switch (kind) {
    case PsiKind::None: return "none";
    case PsiKind::DistToRef: return "dist";
    case PsiKind::MutualDist: return "mutual";
    case PsiKind::Volume: return "volume";
  }
  return "none";
}

PsiKind psi_kind_from_string(const std::string& name) {
  if (name == "none") return PsiKind::None;
  if (name == "dist") return PsiKind::DistToRef;
  if (name == "mutual") return PsiKind::MutualDist;
  if (name == "volume") return PsiKind::Volume;
  throw ConfigError("unknown psi kind '" + name + "'");
}

void PenaltyConfig::validate(Index bands, Index endmembers) const {
  if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0))
    throw ConfigError("penalty weights must be non-negative");
  if (psi == PsiKind::DistToRef && (reference.rows() != bands || reference.cols() != endmembers))
    throw ShapeError("reference endmembers must be L x K");
  if (psi == PsiKind::Volume && frame && frame->endmembers() != endmembers)
    throw ShapeError("PCA frame was fitted for a different K");
}

Matrix reconstruct(const PlmmState& state) {
  state.check_shapes();
  Matrix out = state.M * state.A;
  for (Index n = 0; n < state.pixels(); ++n)
    out.col(n).noalias() += state.dM[static_cast<std::size_t>(n)] * state.A.col(n);
  return out;
}

double data_term(const Matrix& Y, const PlmmState& state) {
  require_shape(Y.rows() == state.bands() && Y.cols() == state.pixels(),
                "objective: Y does not match state dimensions");
  return 0.5 * (Y - reconstruct(state)).squaredNorm();
}

ObjectiveTerms objective_terms(const HsiMatrix& Y, const PlmmState& state,
                               const PenaltyConfig& cfg) {
  state.check_shapes();
  cfg.validate(state.bands(), state.endmembers());
  ObjectiveTerms t;
  t.alpha = cfg.alpha;
  t.beta = cfg.beta;
  t.gamma = cfg.gamma;
  t.data = data_term(Y.data, state);

  if (cfg.smoothness) {
    t.phi = phi_value(*cfg.smoothness, state.A);
  } else if (cfg.alpha > 0.0) {
    t.phi = phi_value(SmoothnessOperator(Y.width, Y.height), state.A);
  }
  switch (cfg.psi) {
    case PsiKind::None: break;
    case PsiKind::DistToRef: t.psi = psi_dist_value(state.M, cfg.reference); break;
    case PsiKind::MutualDist: t.psi = psi_mutual_value(state.M); break;
    case PsiKind::Volume:
      if (!cfg.frame) throw ConfigError("volume penalty needs a fitted PCA frame");
      t.psi = volume_psi(cfg.frame->project(state.M));
      break;
  }
  t.upsilon = upsilon_value(state.dM);
  return t;
}

}  // namespace plmm
