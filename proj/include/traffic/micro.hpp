#pragma once

#include "traffic/params.hpp"

namespace traffic {

// One Bernoulli(p) draw and one noise draw backing a single binary interaction.
struct InteractionDraw {
  double theta = 0.0;  // in {0,1}
  double eta = 0.0;
};

// P(rho) = (1-rho)^mu, the probability of acceleration.
double acceleration_probability(double rho, double mu);

// I(v,w,rho) = P(rho)(1-v) + (1-P(rho))(P(rho)w - v)
double interaction_rule(double v, double w, double rho, double mu);

// D(v,rho) = a(rho) sqrt(v(1-v))
double diffusion_coefficient(double v, double rho, const NoiseSpec& noise);

// Feedback form of the optimal binary control u*.
double optimal_control(double v, double w, double rho, const InteractionDraw& draw,
                       double gamma, double nu, double vbar, double mu);

struct SpeedUpdate {
  double v = 0.0;
  bool rejected = false;  // post-interaction speed left [0,1]; interaction discarded
};

// Controlled post-interaction speed v'; the field particle never changes (w' = w).
SpeedUpdate post_interaction_speed(double v, double w, double rho,
                                   const InteractionDraw& draw,
                                   const ModelParams& params, int lane);

}  // namespace traffic
