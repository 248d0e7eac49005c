#pragma once

#include "plmm/admm.hpp"
#include "plmm/metrics.hpp"
#include "plmm/model.hpp"
#include "plmm/synthgen.hpp"
#include "plmm/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace plmm {

/// Unreadable, missing or malformed files.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// HSM: "HSM1 <rows> <cols>\n" then rows*cols float64 little-endian, row-major.
void write_hsm(std::ostream& out, const Matrix& X);
Matrix read_hsm(std::istream& in);
std::string encode_hsm(const Matrix& X);
Matrix decode_hsm(const std::string& bytes);
void save_hsm(const std::filesystem::path& path, const Matrix& X);
Matrix load_hsm(const std::filesystem::path& path);

/// dM stack as one (L K) x N matrix; entry (l + L k, n) is dM_n(l, k).
Matrix pack_variability(const std::vector<Matrix>& dM);
std::vector<Matrix> unpack_variability(const Matrix& packed, Index bands, Index endmembers);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& key);

/// Flat key=value text. Blank lines and lines starting with '#' are skipped.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

struct RunConfig {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 1.0;
  PsiKind psi = PsiKind::None;
  AdmmConfig admm;
  double outer_tol = 1e-3;
  int max_outer_iters = 100;
  std::uint64_t seed = 0;
};

/// Keys: alpha beta gamma psi_kind eps_abs eps_rel tau_incr tau_decr mu
/// rho0_A rho0_M rho0_dM outer_tol max_outer_iters max_inner_iters seed.
/// Unknown keys throw ConfigError.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
std::string format_run_config(const RunConfig& cfg);

std::string format_synthetic_spec(const SyntheticSpec& spec);
/// Reads the grid and generation parameters back; reference spectra are not stored.
SyntheticSpec parse_synthetic_spec(const std::string& text);

/// iteration,J,data_term,phi,psi,upsilon
std::string objective_trace_csv(const std::vector<ObjectiveTerms>& trace);

std::string eval_csv_header();
std::string eval_csv_row(std::uint64_t seed, const EvalReport& r, double wall_time_s);

struct MapScale {
  double min = 0.0;
  double max = 0.0;
  bool degenerate() const { return !(max > min); }
};

/// 16-bit binary PGM of a row-major width x height image, min-max scaled.
MapScale write_pgm16(const std::filesystem::path& path, const Vector& values, Index width, Index height);
/// Raw 16-bit samples of a P5 file written by write_pgm16.
std::vector<std::uint16_t> read_pgm16(const std::filesystem::path& path, Index* width = nullptr,
                                      Index* height = nullptr);
/// Value recovered from a 16-bit sample and its scale.
double pgm_to_value(std::uint16_t sample, const MapScale& scale);

/// One PGM plus a "<name>.scale.txt" sidecar per row of `maps` (K x N).
/// Returns the written image paths.
std::vector<std::filesystem::path> export_maps(const Matrix& maps, Index width, Index height,
                                               const std::filesystem::path& dir,
                                               const std::string& prefix);
MapScale read_scale_sidecar(const std::filesystem::path& pgm_path);

}  // namespace plmm
