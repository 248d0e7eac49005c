#include "plmm/admm.hpp"
#include "plmm/init.hpp"
#include "plmm/io.hpp"
#include "plmm/metrics.hpp"
#include "plmm/synthgen.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace plmm;

namespace {

PlmmState make_state(Matrix M, Matrix A, std::vector<Matrix> dM) {
  PlmmState s{std::move(M), std::move(A), std::move(dM)};
  s.check_shapes();
  return s;
}

py::dict state_dict(const PlmmState& s) {
  py::dict d;
  d["M"] = s.M;
  d["A"] = s.A;
  d["dM"] = s.dM;
  return d;
}

PlmmState state_from(const py::dict& d) {
  return make_state(d["M"].cast<Matrix>(), d["A"].cast<Matrix>(), d["dM"].cast<std::vector<Matrix>>());
}

}  // namespace

PYBIND11_MODULE(_plmm, m) {
  m.doc() = "Perturbed linear mixing model unmixing";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<AdmmConfig>(m, "AdmmConfig")
      .def(py::init<>())
      .def_readwrite("eps_abs", &AdmmConfig::eps_abs)
      .def_readwrite("eps_rel", &AdmmConfig::eps_rel)
      .def_readwrite("tau_incr", &AdmmConfig::tau_incr)
      .def_readwrite("tau_decr", &AdmmConfig::tau_decr)
      .def_readwrite("mu", &AdmmConfig::mu)
      .def_readwrite("rho0_A", &AdmmConfig::rho0_A)
      .def_readwrite("rho0_M", &AdmmConfig::rho0_M)
      .def_readwrite("rho0_dM", &AdmmConfig::rho0_dM)
      .def_readwrite("max_inner_iters", &AdmmConfig::max_inner_iters)
      .def_readwrite("max_rho_updates", &AdmmConfig::max_rho_updates);

  m.def(
      "generate",
      [](Index width, Index height, Index bands, Index endmembers, double cvar_top, double cvar_bottom,
         double snr_db, bool pure_pixels, std::uint64_t seed) {
        SyntheticSpec s;
        s.width = width;
        s.height = height;
        s.bands = bands;
        s.endmembers = endmembers;
        s.cvar_top = cvar_top;
        s.cvar_bottom = cvar_bottom;
        s.snr_db = snr_db;
        s.pure_pixels = pure_pixels;
        s.seed = seed;
        const GroundTruth gt = generate(s);
        py::dict d = state_dict(gt.truth);
        d["Y"] = gt.Y.data;
        d["noise_sigma"] = gt.noise_sigma;
        return d;
      },
      py::arg("width") = 128, py::arg("height") = 64, py::arg("bands") = 413, py::arg("endmembers") = 3,
      py::arg("cvar_top") = 0.1, py::arg("cvar_bottom") = 0.25, py::arg("snr_db") = 30.0,
      py::arg("pure_pixels") = true, py::arg("seed") = 0,
      "Synthetic dataset as a dict with Y, M, A, dM and noise_sigma.");

  m.def("vca", py::overload_cast<const Matrix&, Index, std::uint64_t>(&vca), py::arg("Y"), py::arg("K"),
        py::arg("seed") = 0);
  m.def(
      "fcls", [](const Matrix& Y, const Matrix& M) { return fcls(Y, M); }, py::arg("Y"), py::arg("M"));
  m.def(
      "initialize",
      [](const Matrix& Y, Index K, std::uint64_t seed) {
        return state_dict(initialize(HsiMatrix(Y, Y.cols(), 1), K, {.seed = seed}));
      },
      py::arg("Y"), py::arg("K"), py::arg("seed") = 0, "VCA endmembers, FCLS abundances, constant dM.");

  m.def(
      "unmix",
      [](const Matrix& Y, Index width, Index height, const py::dict& init, double alpha, double beta,
         double gamma, const std::string& psi, std::optional<Matrix> reference, std::optional<AdmmConfig> admm,
         double outer_tol, int max_outer_iters) {
        BcdConfig cfg;
        cfg.penalty.alpha = alpha;
        cfg.penalty.beta = beta;
        cfg.penalty.gamma = gamma;
        cfg.penalty.psi = psi_kind_from_string(psi);
        if (reference) cfg.penalty.reference = *reference;
        if (admm) cfg.admm = *admm;
        cfg.outer_tol = outer_tol;
        cfg.max_outer_iters = max_outer_iters;
        PlmmState start = state_from(init);
        HsiMatrix data(Y, width, height);
        UnmixResult r;
        {
          py::gil_scoped_release release;
          r = unmix(data, std::move(start), cfg);
        }
        py::dict d = state_dict(r.state);
        std::vector<double> J;
        for (const auto& t : r.trace) J.push_back(t.total());
        d["objective"] = J;
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        return d;
      },
      py::arg("Y"), py::arg("width"), py::arg("height"), py::arg("init"), py::arg("alpha") = 0.0,
      py::arg("beta") = 0.0, py::arg("gamma") = 1.0, py::arg("psi") = "none", py::arg("reference") = py::none(),
      py::arg("admm") = py::none(), py::arg("outer_tol") = 1e-3, py::arg("max_outer_iters") = 100,
      "Block coordinate descent over A, M and dM from the given starting state.");

  m.def(
      "evaluate",
      [](const Matrix& Y, const py::dict& truth, const py::dict& estimate) {
        const EvalReport r = evaluate(Y, state_from(truth), state_from(estimate));
        py::dict d;
        d["aSAM_deg"] = r.asam_deg;
        d["GMSE_A"] = r.gmse_a;
        d["GMSE_dM"] = r.gmse_dm;
        d["RE"] = r.re;
        d["permutation"] = r.permutation;
        return d;
      },
      py::arg("Y"), py::arg("truth"), py::arg("estimate"));
  m.def("reconstruct", [](const py::dict& s) { return reconstruct(state_from(s)); }, py::arg("state"));
  m.def("spectral_angle_deg", &spectral_angle_deg, py::arg("a"), py::arg("b"));
  m.def("variability_energy", &variability_energy, py::arg("dM"));

  m.def("save_hsm", &save_hsm, py::arg("path"), py::arg("X"));
  m.def("load_hsm", &load_hsm, py::arg("path"));
  m.def("pack_variability", &pack_variability, py::arg("dM"));
  m.def("unpack_variability", &unpack_variability, py::arg("packed"), py::arg("bands"), py::arg("endmembers"));
}
