#include "traffic/equilibria.hpp"

#include <cmath>
#include <limits>

#include "traffic/moments.hpp"

namespace traffic {

BetaEquilibrium beta_parameters(double rho, const ModelParams& params, int lane) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::domain_error("beta_parameters: rho must lie in (0,1)");
  double a = params.noise.a(rho);
  double la = params.noise.lambda[lane] * a * a;
  if (la <= 0.0)
    throw DegenerateError("beta_parameters: lambda*a = 0, equilibrium is a Dirac mass");
  double pstar = params.control.effective_penetration(lane);
  double vbar = params.control.recommended_speed[lane](rho);
  double m = single_lane_asymptotic_speed(rho, pstar, params.mu, vbar);
  double scale = 2.0 * (1.0 + pstar) / la;
  BetaEquilibrium eq;
  eq.shape_I = scale * m;
  eq.shape_J = scale * (1.0 - m);
  eq.m_inf = m;
  eq.lane = lane;
  return eq;
}

double equilibrium_pdf(double v, const BetaEquilibrium& eq) {
  const double I = eq.shape_I, J = eq.shape_J;
  if (v < 0.0 || v > 1.0) return 0.0;
  if (v == 0.0) {
    if (I < 1.0) return std::numeric_limits<double>::infinity();
    if (I > 1.0) return 0.0;
  }
  if (v == 1.0) {
    if (J < 1.0) return std::numeric_limits<double>::infinity();
    if (J > 1.0) return 0.0;
  }
  double log_beta = std::lgamma(I) + std::lgamma(J) - std::lgamma(I + J);
  double lv = (I == 1.0) ? 0.0 : (I - 1.0) * std::log(v);
  double lw = (J == 1.0) ? 0.0 : (J - 1.0) * std::log1p(-v);
  return std::exp(lv + lw - log_beta);
}

double equilibrium_variance(const BetaEquilibrium& eq) {
  const double I = eq.shape_I, J = eq.shape_J;
  double s = I + J;
  return I * J / (s * s * (s + 1.0));
}

std::vector<double> sample_equilibrium(std::size_t n, const BetaEquilibrium& eq,
                                       CounterRng& rng) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double g1 = rng.gamma(eq.shape_I);
    double g2 = rng.gamma(eq.shape_J);
    double s = g1 + g2;
    out.push_back(s > 0.0 ? g1 / s : eq.m_inf);
  }
  return out;
}

}  // namespace traffic
