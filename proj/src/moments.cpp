#include "traffic/moments.hpp"

#include <cmath>
#include <sstream>

#include "traffic/micro.hpp"

namespace traffic {

namespace {

constexpr double kRhoClamp = 1e-12;

double clamp_unit(double x) { return std::min(1.0, std::max(0.0, x)); }

double clamp_interior(double rho) {
  return std::min(1.0 - kRhoClamp, std::max(kRhoClamp, rho));
}

// (1 - rho)^alpha with the base floored at 0 for non-integer alpha
double switch_weight(double rho_other, double alpha) {
  return std::pow(std::max(0.0, 1.0 - rho_other), alpha);
}

}  // namespace

std::array<double, 2> density_rhs(double rho1, double rho2, const SwitchingSpec& sw) {
  if (!(rho1 >= 0.0 && rho1 <= 1.0) || !(rho2 >= 0.0 && rho2 <= 1.0))
    throw std::domain_error("density_rhs: rho out of [0,1]");
  double out1 = sw.beta[0] * switch_weight(rho2, sw.alpha) * rho1;
  double in1 = sw.beta[1] * switch_weight(rho1, sw.alpha) * rho2;
  double d1 = in1 - out1;
  return {d1, -d1};
}

std::array<double, 2> mean_speed_rhs_general(const LaneMomentState& s, const ModelParams& p) {
  std::array<double, 2> out{};
  const double gamma = p.gamma;
  for (int i = 0; i < 2; ++i) {
    int j = 1 - i;
    double rho = s.rho[i], m = s.m[i];
    double P = acceleration_probability(rho, p.mu);
    double vbar = p.control.recommended_speed[i](rho);
    double nu = p.nu(i);
    double w_inter, w_ctrl;
    if (std::isfinite(nu)) {
      w_inter = (nu + (1.0 - p.control.p) * gamma * gamma) / (nu + gamma * gamma);
      w_ctrl = gamma * p.control.p / (nu + gamma * gamma);
    } else {
      w_inter = 1.0;
      w_ctrl = 0.0;
    }
    double relax = w_inter * (P - (P + (1.0 - P) * (1.0 - P)) * m) + w_ctrl * (vbar - m);
    double collision = 0.5 * gamma * rho * rho * relax;
    double loss = p.switching.beta[i] * switch_weight(s.rho[j], p.switching.alpha) * rho * m;
    double gain = p.switching.beta[j] * switch_weight(rho, p.switching.alpha) * s.rho[j] * s.m[j];
    out[i] = collision - loss + gain;
  }
  return out;
}

std::array<double, 2> mean_speed_rhs_scaled(const LaneMomentState& s, const ModelParams& p) {
  std::array<double, 2> out{};
  for (int i = 0; i < 2; ++i) {
    int j = 1 - i;
    double rho = s.rho[i], m = s.m[i];
    double P = acceleration_probability(rho, p.mu);
    double vbar = p.control.recommended_speed[i](rho);
    double pstar = p.control.effective_penetration(i);
    double relax = P - (P + (1.0 - P) * (1.0 - P)) * m + pstar * (vbar - m);
    double collision = 0.5 * rho * rho * relax;
    double loss = p.switching.beta[i] * switch_weight(s.rho[j], p.switching.alpha) * rho * m;
    double gain = p.switching.beta[j] * switch_weight(rho, p.switching.alpha) * s.rho[j] * s.m[j];
    out[i] = collision - loss + gain;
  }
  return out;
}

std::array<double, 2> energy_rhs_scaled(const LaneMomentState& s, const ModelParams& p) {
  std::array<double, 2> out{};
  for (int i = 0; i < 2; ++i) {
    int j = 1 - i;
    double rho = s.rho[i], m = s.m[i], E = s.E[i];
    double P = acceleration_probability(rho, p.mu);
    double vbar = p.control.recommended_speed[i](rho);
    double pstar = p.control.effective_penetration(i);
    double relax = P * (m - E) + (1.0 - P) * (1.0 - P) * (m * m - E * E) +
                   pstar * (vbar * m - E);
    double collision = rho * rho * relax;
    double loss = p.switching.beta[i] * switch_weight(s.rho[j], p.switching.alpha) * rho * E;
    double gain = p.switching.beta[j] * switch_weight(rho, p.switching.alpha) * s.rho[j] * s.E[j];
    out[i] = collision - loss + gain;
  }
  return out;
}

namespace {

// y = (rho1, rho2, rho1*m1, rho2*m2, rho1*E1, rho2*E2)
using MomentVec = std::array<double, 6>;

LaneMomentState unpack(const MomentVec& y, double t) {
  LaneMomentState s;
  s.t = t;
  for (int i = 0; i < 2; ++i) {
    s.rho[i] = y[i];
    double rho = std::max(y[i], kRhoClamp);
    s.m[i] = clamp_unit(y[2 + i] / rho);
    s.E[i] = clamp_unit(y[4 + i] / rho);
  }
  return s;
}

MomentVec moment_rhs(const MomentVec& y, double t, const ModelParams& p, TimeScale scale) {
  LaneMomentState s = unpack(y, t);
  double r1 = clamp_unit(s.rho[0]);
  double r2 = clamp_unit(s.rho[1]);
  auto drho = density_rhs(r1, r2, p.switching);
  LaneMomentState sc = s;
  sc.rho = {r1, r2};
  std::array<double, 2> dm, dE;
  if (scale == TimeScale::Scaled) {
    dm = mean_speed_rhs_scaled(sc, p);
    dE = energy_rhs_scaled(sc, p);
  } else {
    dm = mean_speed_rhs_general(sc, p);
    // leading-order original-time energy dynamics
    dE = energy_rhs_scaled(sc, p);
    dE[0] *= p.gamma;
    dE[1] *= p.gamma;
  }
  return {drho[0], drho[1], dm[0], dm[1], dE[0], dE[1]};
}

}  // namespace

std::vector<LaneMomentState> integrate_moments(const LaneMomentState& s0,
                                               const ModelParams& p, double T,
                                               double dt, TimeScale scale) {
  if (!(dt > 0.0)) throw ValidationError("integrate_moments: dt must be > 0");
  if (!(T >= 0.0)) throw ValidationError("integrate_moments: T must be >= 0");

  MomentVec y{s0.rho[0], s0.rho[1],
              s0.rho[0] * s0.m[0], s0.rho[1] * s0.m[1],
              s0.rho[0] * s0.E[0], s0.rho[1] * s0.E[1]};
  auto steps = static_cast<std::size_t>(std::llround(T / dt));
  std::vector<LaneMomentState> traj;
  traj.reserve(steps + 1);
  double t = s0.t;
  traj.push_back(unpack(y, t));

  for (std::size_t n = 0; n < steps; ++n) {
    MomentVec k1 = moment_rhs(y, t, p, scale);
    MomentVec y2, y3, y4;
    for (int i = 0; i < 6; ++i) y2[i] = y[i] + 0.5 * dt * k1[i];
    MomentVec k2 = moment_rhs(y2, t + 0.5 * dt, p, scale);
    for (int i = 0; i < 6; ++i) y3[i] = y[i] + 0.5 * dt * k2[i];
    MomentVec k3 = moment_rhs(y3, t + 0.5 * dt, p, scale);
    for (int i = 0; i < 6; ++i) y4[i] = y[i] + dt * k3[i];
    MomentVec k4 = moment_rhs(y4, t + dt, p, scale);
    for (int i = 0; i < 6; ++i)
      y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = s0.t + (n + 1) * dt;

    LaneMomentState s = unpack(y, t);
    for (int i = 0; i < 2; ++i) {
      if (y[i] < -1e-9 || y[i] > 1.0 + 1e-9) {
        std::ostringstream msg;
        msg << "integrate_moments: rho" << (i + 1) << " = " << y[i]
            << " left [0,1] at t = " << t;
        throw SolverError(msg.str());
      }
    }
    traj.push_back(s);
  }
  return traj;
}

AsymptoticCoefficients asymptotic_coefficients(double rho1, double rho2,
                                               const ModelParams& p) {
  AsymptoticCoefficients c;
  std::array<double, 2> rho{clamp_interior(rho1), clamp_interior(rho2)};
  for (int i = 0; i < 2; ++i) {
    int j = 1 - i;
    double P = acceleration_probability(rho[i], p.mu);
    double pstar = p.control.effective_penetration(i);
    double alpha = p.switching.alpha;
    c.A[i] = P + (1.0 - P) * (1.0 - P) + pstar +
             2.0 * p.switching.beta[i] / rho[i] * switch_weight(rho[j], alpha);
    c.B[i] = P + pstar * p.control.recommended_speed[i](rho[i]);
    c.invC[i] = 2.0 * p.switching.beta[j] * rho[j] * switch_weight(rho[i], alpha) /
                (rho[i] * rho[i]);
  }
  return c;
}

std::array<double, 2> asymptotic_mean_speeds(double rho1, double rho2,
                                             const ModelParams& p,
                                             AsymptoticMethod method) {
  AsymptoticCoefficients c = asymptotic_coefficients(rho1, rho2, p);
  const auto& A = c.A;
  const auto& B = c.B;
  const auto& iC = c.invC;

  if (method == AsymptoticMethod::ClosedForm) {
    // the printed formula, multiplied through by 1/(C1 C2) so that the
    // decoupled beta -> 0 limit (C -> inf) stays finite
    double det = A[0] * A[1] - iC[0] * iC[1];
    if (iC[0] > 0.0 && iC[1] > 0.0 &&
        std::abs(A[0] * A[1] / (iC[0] * iC[1]) - 1.0) < 1e-14)
      throw SolverError("asymptotic_mean_speeds: singular system, |A1 A2 C1 C2 - 1| < 1e-14");
    double m1 = (A[1] * B[0] + B[1] * iC[0]) / det;
    double m2 = (A[0] * B[1] + B[0] * iC[1]) / det;
    return {m1, m2};
  }

  // Gaussian elimination on  A1 m1 - iC1 m2 = B1,  -iC2 m1 + A2 m2 = B2
  double factor = iC[1] / A[0];
  double a22 = A[1] - factor * iC[0];
  if (a22 == 0.0)
    throw SolverError("asymptotic_mean_speeds: singular 2x2 stationarity system");
  double m2 = (B[1] + factor * B[0]) / a22;
  double m1 = (B[0] + iC[0] * m2) / A[0];
  return {m1, m2};
}

double single_lane_asymptotic_speed(double rho, double pstar, double mu, double vbar) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::domain_error("single_lane_asymptotic_speed: rho out of [0,1]");
  if (!std::isfinite(pstar)) return vbar;
  double P = acceleration_probability(rho, mu);
  return (P + pstar * vbar) / (P + (1.0 - P) * (1.0 - P) + pstar);
}

namespace {

// f(x) = (1-x)^alpha / x, monotone decreasing on (0,1]
double split_f(double x, double alpha) {
  return std::pow(1.0 - x, alpha) / x;
}

// inverse of split_f by bisection
double split_f_inv(double y, double alpha) {
  if (y <= 0.0) return 1.0;
  if (!std::isfinite(y)) return 0.0;
  double lo = 0.0, hi = 1.0;  // f(lo+) = +inf, f(hi) = 0
  while (hi - lo > 1e-14) {
    double mid = 0.5 * (lo + hi);
    if (split_f(mid, alpha) > y)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::array<double, 2> equilibrium_density_split(double rho_total, const SwitchingSpec& sw) {
  if (!(rho_total >= 0.0 && rho_total <= 2.0))
    throw std::domain_error("equilibrium_density_split: rho_total out of [0,2]");
  if (sw.beta[1] == 0.0)
    throw DegenerateError("equilibrium_density_split: beta2 = 0, closure undefined");
  if (rho_total == 0.0) return {0.0, 0.0};
  if (rho_total == 2.0) return {1.0, 1.0};

  const double ratio = sw.beta[0] / sw.beta[1];
  const double alpha = sw.alpha;
  // g(x) = f^{-1}(ratio f(x)) + x is monotone increasing from 0 to 2
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    double g = split_f_inv(ratio * split_f(mid, alpha), alpha) + mid;
    if (g < rho_total)
      lo = mid;
    else
      hi = mid;
  }
  double rho2 = 0.5 * (lo + hi);
  return {rho_total - rho2, rho2};
}

std::vector<DiagramRow> fundamental_diagram(const ModelParams& p,
                                            const std::vector<double>& rho_grid) {
  std::vector<DiagramRow> rows;
  rows.reserve(rho_grid.size());
  const auto& beta = p.switching.beta;
  for (double rho : rho_grid) {
    DiagramRow row;
    row.rho_total = rho;
    if (rho <= 0.0) {
      rows.push_back(row);
      continue;
    }
    if (beta[0] == 0.0 && beta[1] == 0.0) {
      row.rho_inf = {0.5 * rho, 0.5 * rho};  // no exchange: initial equal split persists
    } else if (beta[1] == 0.0) {
      row.rho_inf = {rho, 0.0};  // lane 2 drains into lane 1
    } else if (beta[0] == 0.0) {
      row.rho_inf = {0.0, rho};
    } else {
      row.rho_inf = equilibrium_density_split(rho, p.switching);
    }
    row.m_inf = asymptotic_mean_speeds(row.rho_inf[0], row.rho_inf[1], p,
                                       AsymptoticMethod::ClosedForm);
    for (int i = 0; i < 2; ++i) row.flux[i] = row.rho_inf[i] * row.m_inf[i];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace traffic
