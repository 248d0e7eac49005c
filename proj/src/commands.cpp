#include "plmm/commands.hpp"

#include "plmm/init.hpp"
#include "plmm/metrics.hpp"

#include <chrono>
#include <iostream>
#include <limits>
#include <sstream>

namespace plmm {

namespace fs = std::filesystem;

PenaltyChoice parse_penalty(const std::string& name) {
  PenaltyChoice c;
  if (name == "none") return c;
  std::string rest = name;
  if (rest.rfind("ss", 0) == 0) {
    c.smooth = true;
    rest.erase(0, 2);
  }
  if (rest.empty()) {
    if (!c.smooth) throw ConfigError("unknown penalty ''");
  } else if (rest == "mv") {
    c.psi = PsiKind::Volume;
  } else if (rest == "vca") {
    c.psi = PsiKind::DistToRef;
    c.vca_reference = true;
  } else if (rest == "dist") {
    c.psi = PsiKind::DistToRef;
  } else if (rest == "mutual") {
    c.psi = PsiKind::MutualDist;
  } else {
    throw ConfigError("unknown penalty '" + name + "'");
  }
  return c;
}

namespace {

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("missing input file " + p.string());
}

std::string state_report(const UnmixOutcome& o, const std::string& penalty_name) {
  const UnmixResult& r = o.result;
  const ObjectiveTerms& last = r.trace.back();
  long long violations = 0;
  for (bool b : r.increased) violations += b;
  std::ostringstream s;
  auto stats = [&](const char* name, const SubsolverStats& st) {
    s << name << "_admm_solves=" << st.solves << '\n'
      << name << "_admm_iterations=" << st.iterations << '\n'
      << name << "_admm_converged=" << st.converged << '\n'
      << name << "_admm_max_iterations=" << st.max_iterations << '\n';
  };
  s << "penalty=" << penalty_name << '\n'
    << "psi_kind=" << to_string(o.config.psi) << '\n'
    << "alpha=" << format_double(o.config.alpha) << '\n'
    << "beta=" << format_double(o.config.beta) << '\n'
    << "gamma=" << format_double(o.config.gamma) << '\n'
    << "outer_iterations=" << r.iterations << '\n'
    << "converged=" << (r.converged ? "true" : "false") << '\n'
    << "J_initial=" << format_double(r.trace.front().total()) << '\n'
    << "J_final=" << format_double(last.total()) << '\n'
    << "data_term=" << format_double(last.data) << '\n'
    << "phi=" << format_double(last.phi) << '\n'
    << "psi=" << format_double(last.psi) << '\n'
    << "upsilon=" << format_double(last.upsilon) << '\n'
    << "objective_increases=" << violations << '\n'
    << "relaxed_pixel_bounds=" << r.relaxed_pixel_bounds << '\n';
  stats("abundance", r.abundance_stats);
  stats("endmember", r.endmember_stats);
  stats("variability", r.variability_stats);
  return s.str();
}

void save_state(const fs::path& dir, const PlmmState& s) {
  fs::create_directories(dir);
  save_hsm(dir / "M.hsm", s.M);
  save_hsm(dir / "A.hsm", s.A);
  save_hsm(dir / "dM.hsm", pack_variability(s.dM));
}

}  // namespace

void cmd_synth(const SynthArgs& args) {
  SyntheticSpec spec = args.spec;
  if (args.reference) {
    require_file(*args.reference);
    spec.reference = load_hsm(*args.reference);
  }
  const GroundTruth g = generate(spec);
  fs::create_directories(args.out_dir);
  save_hsm(args.out_dir / "Y.hsm", g.Y.data);
  save_hsm(args.out_dir / "M_true.hsm", g.truth.M);
  save_hsm(args.out_dir / "A_true.hsm", g.truth.A);
  save_hsm(args.out_dir / "dM_true.hsm", pack_variability(g.truth.dM));
  write_text(args.out_dir / "spec.cfg", format_synthetic_spec(spec));
}

UnmixOutcome cmd_unmix(const UnmixArgs& args) {
  using clock = std::chrono::steady_clock;

  // Inputs and configuration first, so failures leave no outputs behind.
  require_file(args.input);
  RunConfig cfg;
  if (args.real_data) cfg.admm = AdmmConfig::real();
  if (args.config) {
    require_file(*args.config);
    cfg = parse_run_config(read_text(*args.config), cfg);
  }
  if (args.alpha) cfg.alpha = *args.alpha;
  if (args.beta) cfg.beta = *args.beta;
  if (args.gamma) cfg.gamma = *args.gamma;
  if (args.seed) cfg.seed = *args.seed;

  UnmixOutcome out;
  std::string penalty_name;
  if (args.penalty) {
    out.penalty = parse_penalty(*args.penalty);
    penalty_name = *args.penalty;
    cfg.psi = out.penalty.psi;
  } else {
    out.penalty.smooth = cfg.alpha > 0;
    out.penalty.psi = cfg.psi;
    penalty_name = "config";
  }
  if (!out.penalty.smooth && cfg.alpha != 0.0) {
    std::cerr << "note: penalty without smoothness, alpha set to 0\n";
    cfg.alpha = 0.0;
  }
  if (cfg.psi == PsiKind::None && cfg.beta != 0.0) {
    std::cerr << "note: penalty without an endmember term, beta set to 0\n";
    cfg.beta = 0.0;
  }
  if (cfg.psi == PsiKind::DistToRef && !out.penalty.vca_reference && !args.reference)
    throw ConfigError("penalty 'dist' needs --reference");

  const Matrix Ydata = load_hsm(args.input);
  Index width = args.width, height = args.height;
  if (width == 0 || height == 0) {
    const fs::path spec_path = args.input.parent_path() / "spec.cfg";
    if (fs::is_regular_file(spec_path)) {
      const SyntheticSpec spec = parse_synthetic_spec(read_text(spec_path));
      width = spec.width;
      height = spec.height;
    } else if (cfg.alpha == 0.0) {
      width = Ydata.cols();
      height = 1;
    } else {
      throw ConfigError("smoothness needs the image grid: pass --width and --height");
    }
  }
  if (width * height != Ydata.cols())
    throw ConfigError("grid " + std::to_string(width) + " x " + std::to_string(height) +
                      " does not match " + std::to_string(Ydata.cols()) + " pixels");
  const HsiMatrix Y(Ydata, width, height);
  const Index K = args.endmembers;
  if (K < 2) throw ConfigError("need at least 2 endmembers");

  Matrix reference;
  if (args.reference) {
    require_file(*args.reference);
    reference = load_hsm(*args.reference);
  }

  PlmmState init;
  if (args.init_dir) {
    require_file(*args.init_dir / "M.hsm");
    require_file(*args.init_dir / "A.hsm");
    init.M = load_hsm(*args.init_dir / "M.hsm");
    init.A = load_hsm(*args.init_dir / "A.hsm");
    if (fs::is_regular_file(*args.init_dir / "dM.hsm"))
      init.dM = unpack_variability(load_hsm(*args.init_dir / "dM.hsm"), init.M.rows(), init.M.cols());
    else
      init.dM = constant_variability(init.M.rows(), init.M.cols(), init.A.cols(), kDmInitValue);
    if (init.M.cols() != K) throw ConfigError("initial endmembers do not have K columns");
  } else {
    InitOptions opts;
    opts.seed = cfg.seed;
    init = initialize(Y, K, opts);
  }

  BcdConfig bcd;
  bcd.admm = cfg.admm;
  bcd.outer_tol = cfg.outer_tol;
  bcd.max_outer_iters = cfg.max_outer_iters;
  bcd.penalty.alpha = cfg.alpha;
  bcd.penalty.beta = cfg.beta;
  bcd.penalty.gamma = cfg.gamma;
  bcd.penalty.psi = cfg.psi;
  if (cfg.psi == PsiKind::DistToRef) bcd.penalty.reference = out.penalty.vca_reference ? init.M : reference;
  bcd.validate();

  const auto t0 = clock::now();
  out.result = unmix(Y, init, bcd);
  out.wall_time_s = std::chrono::duration<double>(clock::now() - t0).count();
  out.config = cfg;

  save_state(args.out_dir, out.result.state);
  save_state(args.out_dir / "init", init);
  write_text(args.out_dir / "objective_trace.csv", objective_trace_csv(out.result.trace));
  write_text(args.out_dir / "report.txt", state_report(out, penalty_name));
  write_text(args.out_dir / "config.cfg", format_run_config(cfg));
  write_text(args.out_dir / "timing.txt", "wall_time_s=" + format_double(out.wall_time_s) + "\n");
  return out;
}

std::string cmd_eval(const EvalArgs& args) {
  const fs::path& t = args.truth_dir;
  const fs::path& e = args.estimate_dir;
  for (const char* f : {"Y.hsm", "M_true.hsm", "A_true.hsm", "dM_true.hsm"}) require_file(t / f);
  for (const char* f : {"M.hsm", "A.hsm", "dM.hsm"}) require_file(e / f);

  const Matrix Y = load_hsm(t / "Y.hsm");
  PlmmState truth, est;
  truth.M = load_hsm(t / "M_true.hsm");
  truth.A = load_hsm(t / "A_true.hsm");
  truth.dM = unpack_variability(load_hsm(t / "dM_true.hsm"), truth.M.rows(), truth.M.cols());
  est.M = load_hsm(e / "M.hsm");
  est.A = load_hsm(e / "A.hsm");
  require_shape(est.M.rows() == truth.M.rows() && est.M.cols() == truth.M.cols(),
                "estimate endmembers do not match the truth");
  est.dM = unpack_variability(load_hsm(e / "dM.hsm"), est.M.rows(), est.M.cols());
  require_shape(Y.rows() == truth.bands() && Y.cols() == truth.pixels(), "Y does not match the truth");

  std::uint64_t seed = 0;
  if (args.seed) {
    seed = *args.seed;
  } else if (fs::is_regular_file(t / "spec.cfg")) {
    seed = parse_synthetic_spec(read_text(t / "spec.cfg")).seed;
  }
  double wall = std::numeric_limits<double>::quiet_NaN();
  if (fs::is_regular_file(e / "timing.txt")) {
    const KeyValues kv = parse_key_values(read_text(e / "timing.txt"));
    if (kv.count("wall_time_s")) wall = parse_double(kv.at("wall_time_s"), "wall_time_s");
  }

  const EvalReport r = evaluate(Y, truth, est);
  const std::string csv = eval_csv_header() + eval_csv_row(seed, r, wall);
  if (args.out) write_text(*args.out, csv);
  return csv;
}

std::vector<fs::path> cmd_export_maps(const ExportArgs& args) {
  require_file(args.input);
  const Matrix X = load_hsm(args.input);
  if (args.width < 1 || args.height < 1) throw ConfigError("--width and --height are required");
  Matrix maps;
  std::string prefix = args.prefix;
  if (args.kind == MapKind::Abundance) {
    maps = X;
    if (prefix.empty()) prefix = "abundance";
  } else {
    if (args.endmembers < 1 || X.rows() % args.endmembers != 0)
      throw ConfigError("--endmembers must divide the row count of the dM file");
    maps = variability_energy(unpack_variability(X, X.rows() / args.endmembers, args.endmembers));
    if (prefix.empty()) prefix = "variability";
  }
  if (maps.cols() != args.width * args.height)
    throw ConfigError("width x height does not match the pixel count");
  fs::create_directories(args.out_dir);
  return export_maps(maps, args.width, args.height, args.out_dir, prefix);
}

}  // namespace plmm
