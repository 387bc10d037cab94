#pragma once

#include <array>
#include <vector>

#include "traffic/params.hpp"

namespace traffic {

// Space-homogeneous per-lane moments. The time member is either original t or
// scaled tau depending on how the trajectory was produced.
struct LaneMomentState {
  double t = 0.0;
  std::array<double, 2> rho{0.0, 0.0};
  std::array<double, 2> m{0.0, 0.0};
  std::array<double, 2> E{0.0, 0.0};
};

// d(rho_1)/dt, d(rho_2)/dt with the general (1-rho_j)^alpha switching form.
std::array<double, 2> density_rhs(double rho1, double rho2, const SwitchingSpec& sw);

// d(rho_i m_i)/dt, original time scale, finite gamma and nu.
std::array<double, 2> mean_speed_rhs_general(const LaneMomentState& s, const ModelParams& p);

// d(rho_i m_i)/dtau under the quasi-invariant scaling (nu = kappa*gamma,
// beta -> beta*gamma, tau the slow time), with p*_i = p/kappa_i.
std::array<double, 2> mean_speed_rhs_scaled(const LaneMomentState& s, const ModelParams& p);

// d(rho_i E_i)/dtau, scaled, D == 0 assumed.
std::array<double, 2> energy_rhs_scaled(const LaneMomentState& s, const ModelParams& p);

// Fixed-step RK4 over (rho, rho*m, rho*E). Throws SolverError if any state
// leaves [0,1]^2 beyond 1e-9.
std::vector<LaneMomentState> integrate_moments(const LaneMomentState& s0,
                                               const ModelParams& p, double T,
                                               double dt,
                                               TimeScale scale = TimeScale::Scaled);

// Coefficients of the large-time mean-speed system. invC_i = 1/C_i is stored
// so that the beta -> 0 decoupled limit stays finite.
struct AsymptoticCoefficients {
  std::array<double, 2> A{0.0, 0.0};
  std::array<double, 2> B{0.0, 0.0};
  std::array<double, 2> invC{0.0, 0.0};
};

AsymptoticCoefficients asymptotic_coefficients(double rho1, double rho2,
                                               const ModelParams& p);

enum class AsymptoticMethod { ClosedForm, LinearSolve };

// Large-time mean speeds (m1_inf, m2_inf) at fixed equilibrium densities.
std::array<double, 2> asymptotic_mean_speeds(double rho1, double rho2,
                                             const ModelParams& p,
                                             AsymptoticMethod method);

// Single-lane asymptotic speed (P + p* vbar) / (P + (1-P)^2 + p*).
double single_lane_asymptotic_speed(double rho, double pstar, double mu, double vbar);

// Unique (rho1, rho2) with beta1 (1-rho2)^a rho1 = beta2 (1-rho1)^a rho2 and
// rho1 + rho2 = rho_total. Bisection on [0,1]; throws DegenerateError for
// beta2 = 0.
std::array<double, 2> equilibrium_density_split(double rho_total, const SwitchingSpec& sw);

struct DiagramRow {
  double rho_total = 0.0;
  std::array<double, 2> rho_inf{0.0, 0.0};
  std::array<double, 2> m_inf{0.0, 0.0};
  std::array<double, 2> flux{0.0, 0.0};
};

// Equilibrium flux-density diagram over a grid of total densities in [0,1].
std::vector<DiagramRow> fundamental_diagram(const ModelParams& p,
                                            const std::vector<double>& rho_grid);

}  // namespace traffic
