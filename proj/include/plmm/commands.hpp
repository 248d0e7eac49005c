#pragma once

#include "plmm/admm.hpp"
#include "plmm/io.hpp"
#include "plmm/synthgen.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace plmm {

/// Parsed --penalty value. "ss" turns on the smoothness term; the remainder
/// picks psi: mv -> volume, vca -> distance to the VCA endmembers,
/// dist -> distance to a reference file, mutual -> mutual distance.
struct PenaltyChoice {
  bool smooth = false;
  PsiKind psi = PsiKind::None;
  bool vca_reference = false;
};

PenaltyChoice parse_penalty(const std::string& name);

struct SynthArgs {
  SyntheticSpec spec;
  std::optional<std::filesystem::path> reference;
  std::filesystem::path out_dir;
};

/// Writes Y.hsm, M_true.hsm, A_true.hsm, dM_true.hsm and spec.cfg.
void cmd_synth(const SynthArgs& args);

struct UnmixArgs {
  std::filesystem::path input;
  Index endmembers = 3;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> config;
  std::optional<std::string> penalty;
  std::optional<double> alpha, beta, gamma;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> reference;
  std::optional<std::filesystem::path> init_dir;
  Index width = 0;  // 0: take the grid from spec.cfg next to the input
  Index height = 0;
  bool real_data = false;  // eps_abs default 1e-2 instead of 1e-1
};

struct UnmixOutcome {
  UnmixResult result;
  RunConfig config;
  PenaltyChoice penalty;
  double wall_time_s = 0.0;
};

/// Writes M.hsm, A.hsm, dM.hsm, objective_trace.csv, report.txt, config.cfg,
/// timing.txt and the starting point under init/. Nothing is written when an
/// input is missing or invalid.
UnmixOutcome cmd_unmix(const UnmixArgs& args);

struct EvalArgs {
  std::filesystem::path truth_dir;
  std::filesystem::path estimate_dir;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
};

/// Returns the CSV text (header and one row); also written to `out` if set.
std::string cmd_eval(const EvalArgs& args);

enum class MapKind { Abundance, Variability };

struct ExportArgs {
  std::filesystem::path input;
  MapKind kind = MapKind::Abundance;
  Index width = 0;
  Index height = 0;
  Index endmembers = 0;  // variability only
  std::filesystem::path out_dir;
  std::string prefix;  // defaults to "abundance" / "variability"
};

std::vector<std::filesystem::path> cmd_export_maps(const ExportArgs& args);

}  // namespace plmm
