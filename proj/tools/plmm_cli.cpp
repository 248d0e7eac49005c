#include "plmm/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

template <class T>
void optional_option(CLI::App* app, const std::string& name, std::optional<T>& target,
                     const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbed linear mixing model: hyperspectral unmixing with endmember variability"};
  app.require_subcommand(1);

  plmm::SynthArgs synth;
  std::string reference;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  s->add_option("--width", synth.spec.width, "Image width")->capture_default_str();
  s->add_option("--height", synth.spec.height, "Image height")->capture_default_str();
  s->add_option("--bands", synth.spec.bands, "Number of bands L")->capture_default_str();
  s->add_option("--endmembers", synth.spec.endmembers, "Number of endmembers K")->capture_default_str();
  s->add_option("--snr-db", synth.spec.snr_db, "Noise level in dB, 'inf' for none")->capture_default_str();
  s->add_option("--cvar-top", synth.spec.cvar_top, "Variability coefficient, upper half")->capture_default_str();
  s->add_option("--cvar-bottom", synth.spec.cvar_bottom, "Variability coefficient, lower half")
      ->capture_default_str();
  s->add_option("--pure-pixels", synth.spec.pure_pixels, "Plant one pure pixel per endmember (true/false)")
      ->capture_default_str();
  s->add_option("--max-abundance", synth.spec.max_abundance, "Rejection cap without pure pixels")
      ->capture_default_str();
  s->add_option("--seed", synth.spec.seed, "Random seed")->capture_default_str();
  s->add_option("--reference", reference, "L x K reference endmembers (HSM); default built-in spectra");
  s->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  plmm::UnmixArgs un;
  auto* u = app.add_subcommand("unmix", "Estimate M, A and dM");
  u->add_option("--input", un.input, "Y.hsm")->required();
  u->add_option("--endmembers,-K", un.endmembers, "Number of endmembers K")->capture_default_str();
  u->add_option("--out-dir", un.out_dir, "Output directory")->required();
  optional_option(u, "--config", un.config, "key=value run configuration");
  optional_option(u, "--penalty", un.penalty,
                  "none, ss, mv, vca, dist, mutual, or ss combined with mv/vca/dist/mutual");
  optional_option(u, "--alpha", un.alpha, "Abundance smoothness weight");
  optional_option(u, "--beta", un.beta, "Endmember penalty weight");
  optional_option(u, "--gamma", un.gamma, "Variability weight");
  optional_option(u, "--seed", un.seed, "Seed for VCA");
  optional_option(u, "--reference", un.reference, "Reference endmembers for 'dist' (HSM)");
  optional_option(u, "--init-dir", un.init_dir, "Directory with M.hsm, A.hsm[, dM.hsm] to start from");
  u->add_option("--width", un.width, "Image width (default: from spec.cfg beside the input)");
  u->add_option("--height", un.height, "Image height");
  u->add_flag("--real", un.real_data, "Real-data ADMM tolerance (eps_abs = 1e-2)");

  plmm::EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compare an estimate with the ground truth");
  e->add_option("--truth-dir", ev.truth_dir, "Directory written by synth")->required();
  e->add_option("--estimate-dir", ev.estimate_dir, "Directory written by unmix")->required();
  optional_option(e, "--out", ev.out, "CSV output file (also printed)");
  optional_option(e, "--seed", ev.seed, "Seed column value (default: from spec.cfg)");

  plmm::ExportArgs ex;
  std::string kind = "abundance";
  auto* x = app.add_subcommand("export-maps", "Write per-endmember PGM maps");
  x->add_option("--input", ex.input, "A.hsm or dM.hsm")->required();
  x->add_option("--kind", kind, "abundance or variability")
      ->check(CLI::IsMember({"abundance", "variability"}))
      ->capture_default_str();
  x->add_option("--width", ex.width, "Image width")->required();
  x->add_option("--height", ex.height, "Image height")->required();
  x->add_option("--endmembers,-K", ex.endmembers, "K, needed for variability maps");
  x->add_option("--out-dir", ex.out_dir, "Output directory")->required();
  x->add_option("--prefix", ex.prefix, "File name prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s) {
      if (!reference.empty()) synth.reference = reference;
      plmm::cmd_synth(synth);
    } else if (*u) {
      const plmm::UnmixOutcome o = plmm::cmd_unmix(un);
      std::cout << "outer iterations: " << o.result.iterations
                << (o.result.converged ? " (converged)" : " (iteration limit)") << "\n"
                << "J: " << o.result.trace.front().total() << " -> " << o.result.trace.back().total()
                << "\n";
    } else if (*e) {
      std::cout << plmm::cmd_eval(ev);
    } else if (*x) {
      ex.kind = kind == "variability" ? plmm::MapKind::Variability : plmm::MapKind::Abundance;
      for (const auto& p : plmm::cmd_export_maps(ex)) std::cout << p.string() << "\n";
    }
  } catch (const plmm::IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const plmm::ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
