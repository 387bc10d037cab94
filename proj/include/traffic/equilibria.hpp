#pragma once

#include <vector>

#include "traffic/params.hpp"
#include "traffic/rng.hpp"

namespace traffic {

// Shape parameters of the stationary Beta speed distribution of the
// quasi-invariant Fokker-Planck limit.
struct BetaEquilibrium {
  double shape_I = 1.0;
  double shape_J = 1.0;
  double m_inf = 0.5;  // mean used in the construction, I/(I+J)
  int lane = 0;
};

// I = 2(1+p/kappa) m_inf / (lambda a^2), J likewise with 1-m_inf; the a^2
// comes from solving (lambda/2) (a^2 v(1-v) f)'' = (1+p/kappa) ((m-v) f)'.
// m_inf = single-lane asymptotic speed at rho. Throws DegenerateError when
// lambda a(rho) = 0 (the equilibrium is a Dirac mass).
BetaEquilibrium beta_parameters(double rho, const ModelParams& params, int lane);

// Beta(I,J) density at v; log-gamma evaluation. Returns +inf at an endpoint
// query whose exponent is negative.
double equilibrium_pdf(double v, const BetaEquilibrium& eq);

double equilibrium_variance(const BetaEquilibrium& eq);

// n i.i.d. Beta(I,J) samples via two gamma draws per sample.
std::vector<double> sample_equilibrium(std::size_t n, const BetaEquilibrium& eq,
                                       CounterRng& rng);

}  // namespace traffic
