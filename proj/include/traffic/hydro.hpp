#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "traffic/params.hpp"

namespace traffic {

// Cell averages on a uniform grid. Two components (rho1, rho2) for the
// collision-dominated and slow-switching regimes, one (rho_bar) for the
// fast-switching scalar law.
struct HydroState {
  double x_min = -2.0, x_max = 2.0;
  int nx = 0;
  double time = 0.0;
  std::vector<std::vector<double>> u;

  int components() const { return static_cast<int>(u.size()); }
  double dx() const { return (x_max - x_min) / nx; }
  double cell_center(int c) const { return x_min + (c + 0.5) * dx(); }
};

struct ClosurePoint {
  double rho1 = 0.0, rho2 = 0.0;
  double m1 = 0.0, m2 = 0.0;
  double F = 0.0;
};

// Lane split, asymptotic mean speeds and total flux at a given total density.
// Direct solve, no tabulation.
ClosurePoint fast_switching_closure(double rho_bar, const ModelParams& params,
                                    SumFluxVariant variant = SumFluxVariant::RhoWeighted);

// Uniform table of the fast-switching closure on [0,2], linear interpolation.
struct ClosureTable {
  std::vector<double> rho_bar;
  std::vector<ClosurePoint> points;

  ClosurePoint eval(double rb) const;
};

ClosureTable build_closure_table(const ModelParams& params,
                                 SumFluxVariant variant = SumFluxVariant::RhoWeighted,
                                 int nodes = 1025);

// rho * asymptotic mean speed of an isolated lane, the flux of the
// collision-dominated conservation law. kappa_zero_limit swaps in rho*vbar(rho).
double flux_collision_dominated(double rho, int lane, const ModelParams& params,
                                bool kappa_zero_limit = false);

// Componentwise flux plus optional reaction source; fluxes are scalar in the
// own component for every regime.
struct FluxModel {
  HydroRegime regime = HydroRegime::Collision;
  int components = 2;
  double admissible_max = 1.0;  // per component; 2 for the fast regime
  std::function<double(int comp, double u)> flux;
  std::function<std::array<double, 2>(double rho1, double rho2)> source;  // slow only
};

FluxModel make_flux_model(HydroRegime regime, const ModelParams& params,
                          SumFluxVariant variant = SumFluxVariant::RhoWeighted,
                          bool kappa_zero_limit = false);

HydroState make_hydro_state(const InitialCondition& ic, const DiscretizationSpec& disc,
                            bool total_density);

// Largest |f'| over the sampled range, finite differences on 2001 nodes.
double max_wave_speed(const FluxModel& model, const HydroState& state);

// One SSP-RK step (RK1/RK2/RK3 paired with reconstruction order 1/2/5) of
// global Lax-Friedrichs flux splitting with zero-gradient ghost cells.
// Throws SolverError on CFL violation or NaN.
HydroState fv_step(const HydroState& state, const FluxModel& model,
                   const DiscretizationSpec& disc, double dt, double lambda_max,
                   std::uint64_t* floored = nullptr, int threads = 0);

struct HydroResult {
  std::vector<std::pair<double, HydroState>> snapshots;
  std::vector<double> lambda_history;
  std::uint64_t floored_cells = 0;
  int steps = 0;
};

// Advances to `until` with CFL-limited steps, capturing the requested
// snapshot times exactly.
HydroResult fv_advance(const HydroState& s0, const FluxModel& model,
                       const DiscretizationSpec& disc, double until,
                       const std::vector<double>& snapshot_times, int threads = 0);

}  // namespace traffic
