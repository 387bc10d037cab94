#include "traffic/micro.hpp"

#include <cmath>

namespace traffic {

namespace {

void check_unit(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error(std::string(name) + " must lie in [0,1]");
}

}  // namespace

double acceleration_probability(double rho, double mu) {
  check_unit(rho, "rho");
  return std::pow(1.0 - rho, mu);
}

double interaction_rule(double v, double w, double rho, double mu) {
  check_unit(v, "v");
  check_unit(w, "w");
  double P = acceleration_probability(rho, mu);
  return P * (1.0 - v) + (1.0 - P) * (P * w - v);
}

double diffusion_coefficient(double v, double rho, const NoiseSpec& noise) {
  return noise.a(rho) * std::sqrt(std::max(0.0, v * (1.0 - v)));
}

double optimal_control(double v, double w, double rho, const InteractionDraw& draw,
                       double gamma, double nu, double vbar, double mu) {
  if (!std::isfinite(nu)) return 0.0;
  double theta = draw.theta;
  double denom = nu + gamma * gamma * theta * theta;
  double I = interaction_rule(v, w, rho, mu);
  return (gamma * theta / denom) * (vbar - v) - (gamma * gamma * theta / denom) * I;
}

SpeedUpdate post_interaction_speed(double v, double w, double rho,
                                   const InteractionDraw& draw,
                                   const ModelParams& params, int lane) {
  const double gamma = params.gamma;
  const double nu = params.nu(lane);
  const double I = interaction_rule(v, w, rho, params.mu);
  const double vbar = params.control.recommended_speed[lane](rho);
  const double D = diffusion_coefficient(v, rho, params.noise);

  double vprime;
  if (!std::isfinite(nu)) {
    // kappa = +inf: the uncontrolled rule
    vprime = v + gamma * I + D * draw.eta;
  } else {
    double theta2 = draw.theta * draw.theta;
    double denom = nu + gamma * gamma * theta2;
    vprime = v + (nu * gamma / denom) * I +
             (gamma * gamma * theta2 / denom) * (vbar - v) + D * draw.eta;
  }
  if (vprime < 0.0 || vprime > 1.0) return {v, true};
  return {vprime, false};
}

}  // namespace traffic
