#pragma once

#include "plmm/admm.hpp"
#include "plmm/model.hpp"
#include "plmm/types.hpp"

#include <cstdint>

namespace plmm {

/// Starting value of every dM entry: machine epsilon to three digits.
constexpr double kDmInitValue = 2.22e-16;

/// Vertex component analysis. Returns K columns of Y.
/// Throws DegenerateError when the data cannot supply K distinct vertices.
Matrix vca(const Matrix& Y, Index K, std::uint64_t seed);
inline Matrix vca(const HsiMatrix& Y, Index K, std::uint64_t seed) { return vca(Y.data, K, seed); }

/// Column indices picked by vca, in selection order.
std::vector<Index> vca_indices(const Matrix& Y, Index K, std::uint64_t seed);

/// Inner settings for FCLS: the abundance solver run to high accuracy.
AdmmConfig fcls_config();

/// Per-pixel min 1/2 ||y_n - M a||^2 s.t. a >= 0, 1^T a = 1.
Matrix fcls(const Matrix& Y, const Matrix& M, const AdmmConfig& cfg = fcls_config());

struct InitOptions {
  std::uint64_t seed = 0;
  double dm_init_value = kDmInitValue;
  AdmmConfig fcls = fcls_config();
};

/// VCA endmembers, FCLS abundances, constant dM.
PlmmState initialize(const HsiMatrix& Y, Index K, const InitOptions& opts = {});

}  // namespace plmm
