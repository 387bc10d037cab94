#include "traffic/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include "json.hpp"
#include "traffic/io.hpp"
#include "traffic/moments.hpp"

namespace traffic {

namespace {

using nlohmann::json;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Homogeneous: return "homogeneous";
    case ExperimentKind::Diagram: return "diagram";
    case ExperimentKind::Dsmc: return "dsmc";
    case ExperimentKind::Hydro: return "hydro";
    case ExperimentKind::Compare: return "compare";
  }
  return "unknown";
}

std::string kappa_label(double k) {
  return std::isfinite(k) ? format_number(k) : std::string("inf");
}

CsvTable diagram_table(const ModelParams& params, const std::vector<double>& grid) {
  CsvTable t;
  t.header = {"rho", "rho1_inf", "rho2_inf", "m1_inf", "m2_inf", "q1", "q2"};
  for (const DiagramRow& r : fundamental_diagram(params, grid))
    t.rows.push_back({r.rho_total, r.rho_inf[0], r.rho_inf[1], r.m_inf[0], r.m_inf[1],
                      r.flux[0], r.flux[1]});
  return t;
}

}  // namespace

double l1_density_error(const std::vector<double>& a, const std::vector<double>& b,
                        double dx) {
  if (a.size() != b.size())
    throw ValidationError("l1_density_error: grid size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * dx;
}

std::vector<double> aggregate_cells(const std::vector<double>& fine, int factor) {
  if (factor < 1 || fine.size() % factor != 0)
    throw ValidationError("aggregate_cells: fine grid is not a multiple of the factor");
  std::vector<double> coarse(fine.size() / factor, 0.0);
  for (std::size_t c = 0; c < coarse.size(); ++c) {
    for (int k = 0; k < factor; ++k) coarse[c] += fine[c * factor + k];
    coarse[c] /= factor;
  }
  return coarse;
}

RunResult cmd_homogeneous(const ModelParams& params, const ExperimentSpec& exp,
                          const std::string& out_dir) {
  auto t0 = Clock::now();
  LaneMomentState s0;
  s0.rho = exp.rho0;
  s0.m = exp.m0;
  s0.E = exp.E0;
  auto traj = integrate_moments(s0, params, exp.final_time, exp.discretization.dt,
                                exp.time_scale);
  CsvTable t;
  t.header = {"t", "rho1", "rho2", "m1", "m2", "E1", "E2"};
  std::array<double, 2> minf{0.0, 0.0};
  if (exp.include_asymptotes) {
    const LaneMomentState& last = traj.back();
    minf = asymptotic_mean_speeds(last.rho[0], last.rho[1], params,
                                  AsymptoticMethod::ClosedForm);
    t.header.push_back("m1_inf");
    t.header.push_back("m2_inf");
  }
  for (const LaneMomentState& s : traj) {
    std::vector<double> row{s.t, s.rho[0], s.rho[1], s.m[0], s.m[1], s.E[0], s.E[1]};
    if (exp.include_asymptotes) {
      row.push_back(minf[0]);
      row.push_back(minf[1]);
    }
    t.rows.push_back(std::move(row));
  }
  write_csv(join(out_dir, "trajectory.csv"), t);
  return {{"trajectory.csv"}, seconds_since(t0)};
}

RunResult cmd_diagram(const ModelParams& params, const ExperimentSpec& exp,
                      const std::string& out_dir) {
  auto t0 = Clock::now();
  std::vector<double> grid = exp.rho_grid;
  if (grid.empty()) {
    grid.resize(101);
    for (int k = 0; k <= 100; ++k) grid[k] = k / 100.0;
  }
  RunResult res;
  if (exp.kappa_list.empty()) {
    write_csv(join(out_dir, "diagram.csv"), diagram_table(params, grid));
    res.files.push_back("diagram.csv");
  } else {
    for (double kappa : exp.kappa_list) {
      ModelParams p = params;
      p.control.kappa = {kappa, kappa};
      std::string name = "diagram_kappa_" + kappa_label(kappa) + ".csv";
      write_csv(join(out_dir, name), diagram_table(p, grid));
      res.files.push_back(name);
    }
  }
  res.wall_seconds = seconds_since(t0);
  return res;
}

namespace {

CsvTable snapshot_table(const MacroField& f) {
  CsvTable t;
  t.header = {"x", "rho1", "rho2", "m1", "m2"};
  for (int c = 0; c < f.nx; ++c) {
    double x = f.x_min + (c + 0.5) * f.dx();
    t.rows.push_back({x, f.rho[0][c], f.rho[1][c], f.m[0][c], f.m[1][c]});
  }
  return t;
}

CsvTable phase_table(const MacroField& f) {
  CsvTable t;
  t.header = {"x", "v", "f1", "f2"};
  double dv = 1.0 / f.nv;
  for (int c = 0; c < f.nx; ++c) {
    double x = f.x_min + (c + 0.5) * f.dx();
    for (int iv = 0; iv < f.nv; ++iv) {
      double v = (iv + 0.5) * dv;
      std::size_t k = std::size_t(c) * f.nv + iv;
      t.rows.push_back({x, v, f.phase[0][k], f.phase[1][k]});
    }
  }
  return t;
}

}  // namespace

RunResult cmd_dsmc(const ModelParams& params, const ExperimentSpec& exp,
                   const std::string& out_dir, int threads) {
  auto t0 = Clock::now();
  DsmcResult run = run_dsmc(exp, params, threads);
  RunResult res;
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    std::string name = "dsmc_t" + std::to_string(k) + ".csv";
    write_csv(join(out_dir, name), snapshot_table(run.snapshots[k].second));
    res.files.push_back(name);
    if (exp.phase_histogram) {
      std::string pname = "phase_t" + std::to_string(k) + ".csv";
      write_csv(join(out_dir, pname), phase_table(run.snapshots[k].second));
      res.files.push_back(pname);
    }
  }
  const EnsembleDiagnostics& d = run.diagnostics;
  json diag{{"interactions", d.interactions},
            {"rejections", d.rejections},
            {"rejection_rate",
             d.interactions ? double(d.rejections) / double(d.interactions) : 0.0},
            {"switches", d.switches},
            {"outflow", d.outflow},
            {"empty_cell_beta", d.empty_cell_beta},
            {"wall_seconds", run.wall_seconds}};
  json times = json::array();
  for (const auto& [t, f] : run.snapshots) times.push_back(t);
  diag["snapshot_times"] = times;
  write_text(join(out_dir, "diagnostics.json"), diag.dump(2) + "\n");
  res.files.push_back("diagnostics.json");
  res.wall_seconds = seconds_since(t0);
  return res;
}

RunResult cmd_hydro(const ModelParams& params, const ExperimentSpec& exp,
                    const std::string& out_dir, int threads) {
  auto t0 = Clock::now();
  const bool fast = exp.hydro_regime == HydroRegime::Fast;
  HydroState s0 = make_hydro_state(exp.initial_condition, exp.discretization, fast);
  FluxModel model =
      make_flux_model(exp.hydro_regime, params, exp.sum_flux, exp.kappa_zero_limit);
  std::vector<double> snaps = exp.snapshots;
  if (snaps.empty()) snaps.push_back(exp.final_time);
  HydroResult run =
      fv_advance(s0, model, exp.discretization, exp.final_time, snaps, threads);

  ClosureTable table;
  if (fast) table = build_closure_table(params, exp.sum_flux);
  RunResult res;
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    const HydroState& s = run.snapshots[k].second;
    CsvTable t;
    if (fast) {
      t.header = {"x", "rho_bar", "rho1", "rho2"};
      for (int c = 0; c < s.nx; ++c) {
        ClosurePoint pt = table.eval(s.u[0][c]);
        t.rows.push_back({s.cell_center(c), s.u[0][c], pt.rho1, pt.rho2});
      }
    } else {
      t.header = {"x", "rho1", "rho2"};
      for (int c = 0; c < s.nx; ++c)
        t.rows.push_back({s.cell_center(c), s.u[0][c], s.u[1][c]});
    }
    std::string name = "hydro_t" + std::to_string(k) + ".csv";
    write_csv(join(out_dir, name), t);
    res.files.push_back(name);
  }
  json meta{{"regime", exp.hydro_regime == HydroRegime::Collision ? "collision"
                       : fast                                     ? "fast"
                                                                  : "slow"},
            {"order", exp.discretization.order},
            {"cfl", exp.discretization.cfl},
            {"steps", run.steps},
            {"floored_cells", run.floored_cells},
            {"lambda_max_history", run.lambda_history}};
  write_text(join(out_dir, "hydro_meta.json"), meta.dump(2) + "\n");
  res.files.push_back("hydro_meta.json");
  res.wall_seconds = seconds_since(t0);
  return res;
}

RunResult cmd_compare(const ModelParams& params, const ExperimentSpec& exp,
                      const std::string& out_dir, int threads) {
  auto t0 = Clock::now();
  if (exp.epsilon_list.empty())
    throw ValidationError("compare requires a non-empty epsilon_list");

  // Slow-switching hydro reference on a 20x finer grid, aggregated back onto
  // the comparison cells. The grid is extended to the left so the ghost-cell
  // boundary cannot reach the window: the kinetic run sees vacuum inflow,
  // which the free-space extension reproduces (speeds are <= 1).
  const int factor = 20;
  const int extra = std::max(3, int(std::ceil(exp.final_time / exp.discretization.dx())));
  DiscretizationSpec fine = exp.discretization;
  fine.x_min = exp.discretization.x_min - extra * exp.discretization.dx();
  fine.nx = (exp.discretization.nx + extra) * factor;
  fine.order = 2;
  HydroState s0 = make_hydro_state(exp.initial_condition, fine, false);
  FluxModel model = make_flux_model(HydroRegime::Slow, params, exp.sum_flux, false);
  HydroResult href = fv_advance(s0, model, fine, exp.final_time, {exp.final_time}, threads);
  std::array<std::vector<double>, 2> rho_hydro;
  for (int lane = 0; lane < 2; ++lane) {
    const std::vector<double>& full = href.snapshots.back().second.u[lane];
    std::vector<double> window(full.begin() + std::size_t(extra) * factor, full.end());
    rho_hydro[lane] = aggregate_cells(window, factor);
  }

  CsvTable t;
  t.header = {"epsilon", "l1_lane1", "l1_lane2"};
  const double dx = exp.discretization.dx();
  // the splitting step scales with epsilon; the config's (dt, epsilon) pair
  // fixes the ratio, so each run uses dt = (dt/epsilon) * eps
  const double dt_ratio = (exp.discretization.dt > 0.0 && exp.epsilon > 0.0)
                              ? exp.discretization.dt / exp.epsilon
                              : 1.0;
  for (double eps : exp.epsilon_list) {
    ExperimentSpec run = exp;
    run.epsilon = eps;
    run.discretization.dt = dt_ratio * eps;
    run.snapshots = {exp.final_time};
    run.phase_histogram = false;
    // slow-switching scaling: the kinetic rates track epsilon, beta_i = c_i eps
    ModelParams kin_params = params;
    kin_params.switching.beta = {params.switching.regime_rates[0] * eps,
                                 params.switching.regime_rates[1] * eps};
    DsmcResult kin = run_dsmc(run, kin_params, threads);
    const MacroField& f = kin.snapshots.back().second;
    t.rows.push_back({eps, l1_density_error(f.rho[0], rho_hydro[0], dx),
                      l1_density_error(f.rho[1], rho_hydro[1], dx)});
  }
  write_csv(join(out_dir, "compare.csv"), t);
  return {{"compare.csv"}, seconds_since(t0)};
}

RunResult run_experiment(const ModelParams& params, const ExperimentSpec& exp,
                         const std::string& out_dir, int threads) {
  auto t0 = Clock::now();
  RunResult res;
  switch (exp.kind) {
    case ExperimentKind::Homogeneous: res = cmd_homogeneous(params, exp, out_dir); break;
    case ExperimentKind::Diagram: res = cmd_diagram(params, exp, out_dir); break;
    case ExperimentKind::Dsmc: res = cmd_dsmc(params, exp, out_dir, threads); break;
    case ExperimentKind::Hydro: res = cmd_hydro(params, exp, out_dir, threads); break;
    case ExperimentKind::Compare: res = cmd_compare(params, exp, out_dir, threads); break;
  }
  res.wall_seconds = seconds_since(t0);
  std::string snapshot = serialize_config(params, exp);
  json manifest{{"command", kind_name(exp.kind)},
                {"config", json::parse(snapshot)},
                {"config_hash", content_hash(snapshot)},
                {"seed", exp.seed},
                {"threads", threads},
                {"outputs", res.files},
                {"wall_seconds", res.wall_seconds}};
  write_text(join(out_dir, "manifest.json"), manifest.dump(2) + "\n");
  return res;
}

}  // namespace traffic
