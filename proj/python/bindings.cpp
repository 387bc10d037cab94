#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "traffic/dsmc.hpp"
#include "traffic/equilibria.hpp"
#include "traffic/hydro.hpp"
#include "traffic/io.hpp"
#include "traffic/micro.hpp"
#include "traffic/moments.hpp"
#include "traffic/runner.hpp"

namespace py = pybind11;
using namespace traffic;

namespace {

py::dict field_to_dict(const MacroField& f) {
  py::dict d;
  std::vector<double> x(f.nx);
  for (int c = 0; c < f.nx; ++c) x[c] = f.x_min + (c + 0.5) * f.dx();
  d["x"] = x;
  d["rho1"] = f.rho[0];
  d["rho2"] = f.rho[1];
  d["m1"] = f.m[0];
  d["m2"] = f.m[1];
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "kinetic multilane traffic toolkit";

  py::register_exception<ValidationError>(mod, "ValidationError", PyExc_ValueError);
  py::register_exception<DegenerateError>(mod, "DegenerateError", PyExc_ValueError);
  py::register_exception<SolverError>(mod, "SolverError", PyExc_RuntimeError);

  py::class_<ModelParams>(mod, "ModelParams")
      .def_readwrite("gamma", &ModelParams::gamma)
      .def_readwrite("mu", &ModelParams::mu)
      .def("nu", &ModelParams::nu, py::arg("lane"));

  py::class_<ExperimentSpec>(mod, "ExperimentSpec")
      .def_readwrite("epsilon", &ExperimentSpec::epsilon)
      .def_readwrite("final_time", &ExperimentSpec::final_time)
      .def_readwrite("seed", &ExperimentSpec::seed)
      .def_readwrite("snapshots", &ExperimentSpec::snapshots)
      .def_readwrite("phase_histogram", &ExperimentSpec::phase_histogram);

  py::class_<BetaEquilibrium>(mod, "BetaEquilibrium")
      .def_readonly("shape_I", &BetaEquilibrium::shape_I)
      .def_readonly("shape_J", &BetaEquilibrium::shape_J)
      .def_readonly("m_inf", &BetaEquilibrium::m_inf);

  mod.def("load_config",
          [](const std::string& text) { return traffic::load_config(text); },
          py::arg("text"));
  mod.def("serialize_config", &serialize_config, py::arg("params"), py::arg("experiment"));

  mod.def("acceleration_probability", &acceleration_probability, py::arg("rho"),
          py::arg("mu"));
  mod.def("interaction_rule", &interaction_rule, py::arg("v"), py::arg("w"),
          py::arg("rho"), py::arg("mu"));
  mod.def("single_lane_asymptotic_speed", &single_lane_asymptotic_speed, py::arg("rho"),
          py::arg("pstar"), py::arg("mu"), py::arg("vbar"));
  mod.def(
      "asymptotic_mean_speeds",
      [](double rho1, double rho2, const ModelParams& p, const std::string& method) {
        auto m = method == "linear_solve" ? AsymptoticMethod::LinearSolve
                                          : AsymptoticMethod::ClosedForm;
        return asymptotic_mean_speeds(rho1, rho2, p, m);
      },
      py::arg("rho1"), py::arg("rho2"), py::arg("params"),
      py::arg("method") = "closed_form");
  mod.def(
      "equilibrium_density_split",
      [](double rho_total, const ModelParams& p) {
        return equilibrium_density_split(rho_total, p.switching);
      },
      py::arg("rho_total"), py::arg("params"));
  mod.def(
      "integrate_moments",
      [](const ModelParams& p, std::array<double, 2> rho0, std::array<double, 2> m0,
         std::array<double, 2> E0, double T, double dt, const std::string& scale) {
        LaneMomentState s0;
        s0.rho = rho0;
        s0.m = m0;
        s0.E = E0;
        auto traj = integrate_moments(
            s0, p, T, dt,
            scale == "original" ? TimeScale::Original : TimeScale::Scaled);
        py::list out;
        for (const auto& s : traj)
          out.append(py::make_tuple(s.t, s.rho[0], s.rho[1], s.m[0], s.m[1], s.E[0],
                                    s.E[1]));
        return out;
      },
      py::arg("params"), py::arg("rho0"), py::arg("m0"), py::arg("E0"), py::arg("T"),
      py::arg("dt") = 1e-3, py::arg("scale") = "scaled");
  mod.def(
      "fundamental_diagram",
      [](const ModelParams& p, const std::vector<double>& grid) {
        py::list out;
        for (const auto& r : fundamental_diagram(p, grid))
          out.append(py::make_tuple(r.rho_total, r.rho_inf[0], r.rho_inf[1], r.m_inf[0],
                                    r.m_inf[1], r.flux[0], r.flux[1]));
        return out;
      },
      py::arg("params"), py::arg("rho_grid"));

  mod.def("beta_parameters", &beta_parameters, py::arg("rho"), py::arg("params"),
          py::arg("lane") = 0);
  mod.def("equilibrium_pdf", &equilibrium_pdf, py::arg("v"), py::arg("eq"));
  mod.def("equilibrium_variance", &equilibrium_variance, py::arg("eq"));

  mod.def(
      "flux_collision_dominated",
      [](double rho, int lane, const ModelParams& p, bool kappa_zero_limit) {
        return flux_collision_dominated(rho, lane, p, kappa_zero_limit);
      },
      py::arg("rho"), py::arg("lane"), py::arg("params"),
      py::arg("kappa_zero_limit") = false);
  mod.def(
      "fast_switching_closure",
      [](double rho_bar, const ModelParams& p) {
        ClosurePoint pt = fast_switching_closure(rho_bar, p);
        return py::make_tuple(pt.rho1, pt.rho2, pt.m1, pt.m2, pt.F);
      },
      py::arg("rho_bar"), py::arg("params"));

  mod.def(
      "run_dsmc",
      [](const ModelParams& p, const ExperimentSpec& exp, int threads) {
        DsmcResult r = run_dsmc(exp, p, threads);
        py::list snaps;
        for (const auto& [t, f] : r.snapshots) {
          py::dict d = field_to_dict(f);
          d["t"] = t;
          snaps.append(d);
        }
        py::dict out;
        out["snapshots"] = snaps;
        out["wall_seconds"] = r.wall_seconds;
        out["rejections"] = r.diagnostics.rejections;
        out["interactions"] = r.diagnostics.interactions;
        out["switches"] = r.diagnostics.switches;
        out["outflow"] = r.diagnostics.outflow;
        return out;
      },
      py::arg("params"), py::arg("experiment"), py::arg("threads") = 0);

  mod.def(
      "run_experiment",
      [](const ModelParams& p, const ExperimentSpec& exp, const std::string& out_dir,
         int threads) {
        RunResult r = run_experiment(p, exp, out_dir, threads);
        return r.files;
      },
      py::arg("params"), py::arg("experiment"), py::arg("out_dir"),
      py::arg("threads") = 0);
}
