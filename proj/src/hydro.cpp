#include "traffic/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <thread>

#include "traffic/moments.hpp"

namespace traffic {

namespace {

void parallel_ranges(int n, int threads, const std::function<void(int, int)>& body) {
  if (threads <= 1 || n < 2 * threads) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  int chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    int lo = w * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi);
  }
  for (auto& t : pool) t.join();
}

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// left-biased fifth-order reconstruction at the right cell interface
double weno5(double fm2, double fm1, double f0, double fp1, double fp2) {
  constexpr double eps = 1e-6;
  double p0 = (2.0 * fm2 - 7.0 * fm1 + 11.0 * f0) / 6.0;
  double p1 = (-fm1 + 5.0 * f0 + 2.0 * fp1) / 6.0;
  double p2 = (2.0 * f0 + 5.0 * fp1 - fp2) / 6.0;
  double b0 = 13.0 / 12.0 * (fm2 - 2.0 * fm1 + f0) * (fm2 - 2.0 * fm1 + f0) +
              0.25 * (fm2 - 4.0 * fm1 + 3.0 * f0) * (fm2 - 4.0 * fm1 + 3.0 * f0);
  double b1 = 13.0 / 12.0 * (fm1 - 2.0 * f0 + fp1) * (fm1 - 2.0 * f0 + fp1) +
              0.25 * (fm1 - fp1) * (fm1 - fp1);
  double b2 = 13.0 / 12.0 * (f0 - 2.0 * fp1 + fp2) * (f0 - 2.0 * fp1 + fp2) +
              0.25 * (3.0 * f0 - 4.0 * fp1 + fp2) * (3.0 * f0 - 4.0 * fp1 + fp2);
  double w0 = 0.1 / ((eps + b0) * (eps + b0));
  double w1 = 0.6 / ((eps + b1) * (eps + b1));
  double w2 = 0.3 / ((eps + b2) * (eps + b2));
  double ws = w0 + w1 + w2;
  return (w0 * p0 + w1 * p1 + w2 * p2) / ws;
}

int ghost_width(int order) { return order == 5 ? 3 : order; }

// Single forward-Euler stage: returns L(u) = -d/dx H + source.
std::vector<std::vector<double>> stage_rhs(const HydroState& s, const FluxModel& model,
                                           int order, double lam, int threads) {
  const int nx = s.nx;
  const int g = ghost_width(order);
  const double dx = s.dx();
  std::vector<std::vector<double>> rhs(s.components(), std::vector<double>(nx, 0.0));

  for (int comp = 0; comp < s.components(); ++comp) {
    const std::vector<double>& uc = s.u[comp];
    std::vector<double> fp(nx + 2 * g), fm(nx + 2 * g);
    for (int k = 0; k < nx + 2 * g; ++k) {
      double uv = uc[std::min(nx - 1, std::max(0, k - g))];  // zero-gradient ghosts
      double fv = model.flux(comp, uv);
      fp[k] = 0.5 * (fv + lam * uv);
      fm[k] = 0.5 * (fv - lam * uv);
    }
    // H[k] lives at the interface between cells k-1 and k (padded index g+k-1 | g+k)
    std::vector<double> H(nx + 1);
    parallel_ranges(nx + 1, threads, [&](int lo, int hi) {
      for (int k = lo; k < hi; ++k) {
        int i = g + k - 1;  // padded index of the cell left of the interface
        double hp, hm;
        if (order == 1) {
          hp = fp[i];
          hm = fm[i + 1];
        } else if (order == 2) {
          hp = fp[i] + 0.5 * minmod(fp[i] - fp[i - 1], fp[i + 1] - fp[i]);
          hm = fm[i + 1] - 0.5 * minmod(fm[i + 1] - fm[i], fm[i + 2] - fm[i + 1]);
        } else {
          hp = weno5(fp[i - 2], fp[i - 1], fp[i], fp[i + 1], fp[i + 2]);
          hm = weno5(fm[i + 3], fm[i + 2], fm[i + 1], fm[i], fm[i - 1]);
        }
        H[k] = hp + hm;
      }
    });
    for (int c = 0; c < nx; ++c) rhs[comp][c] = -(H[c + 1] - H[c]) / dx;
  }
  if (model.source && s.components() == 2) {
    for (int c = 0; c < nx; ++c) {
      auto src = model.source(s.u[0][c], s.u[1][c]);
      rhs[0][c] += src[0];
      rhs[1][c] += src[1];
    }
  }
  return rhs;
}

HydroState axpy(const HydroState& base, double a, const HydroState& x, double b,
                const std::vector<std::vector<double>>& rhs, double dt) {
  HydroState out = base;
  for (int comp = 0; comp < base.components(); ++comp)
    for (int c = 0; c < base.nx; ++c)
      out.u[comp][c] = a * base.u[comp][c] + b * (x.u[comp][c] + dt * rhs[comp][c]);
  return out;
}

}  // namespace

ClosurePoint fast_switching_closure(double rho_bar, const ModelParams& params,
                                    SumFluxVariant variant) {
  if (!(rho_bar >= 0.0 && rho_bar <= 2.0))
    throw std::domain_error("fast_switching_closure: rho_bar must lie in [0,2]");
  ClosurePoint pt;
  if (rho_bar <= 0.0) return pt;
  auto split = equilibrium_density_split(rho_bar, params.switching);
  pt.rho1 = split[0];
  pt.rho2 = split[1];
  auto m = asymptotic_mean_speeds(pt.rho1, pt.rho2, params, AsymptoticMethod::LinearSolve);
  pt.m1 = m[0];
  pt.m2 = m[1];
  pt.F = variant == SumFluxVariant::RhoWeighted ? pt.rho1 * pt.m1 + pt.rho2 * pt.m2
                                                : pt.m1 + pt.m2;
  return pt;
}

ClosurePoint ClosureTable::eval(double rb) const {
  double x = std::min(2.0, std::max(0.0, rb));
  const std::size_t n = rho_bar.size();
  double pos = x / 2.0 * double(n - 1);
  auto k = std::min(n - 2, static_cast<std::size_t>(pos));
  double w = pos - double(k);
  const ClosurePoint& a = points[k];
  const ClosurePoint& b = points[k + 1];
  ClosurePoint out;
  out.rho1 = a.rho1 + w * (b.rho1 - a.rho1);
  out.rho2 = a.rho2 + w * (b.rho2 - a.rho2);
  out.m1 = a.m1 + w * (b.m1 - a.m1);
  out.m2 = a.m2 + w * (b.m2 - a.m2);
  out.F = a.F + w * (b.F - a.F);
  return out;
}

ClosureTable build_closure_table(const ModelParams& params, SumFluxVariant variant,
                                 int nodes) {
  ClosureTable t;
  t.rho_bar.reserve(nodes);
  t.points.reserve(nodes);
  for (int k = 0; k < nodes; ++k) {
    double rb = 2.0 * double(k) / double(nodes - 1);
    t.rho_bar.push_back(rb);
    t.points.push_back(fast_switching_closure(rb, params, variant));
  }
  return t;
}

double flux_collision_dominated(double rho, int lane, const ModelParams& params,
                                bool kappa_zero_limit) {
  // evolved cell values can overshoot [0,1] by rounding or limiter slack
  rho = std::min(1.0, std::max(0.0, rho));
  double vbar = params.control.recommended_speed[lane](rho);
  if (kappa_zero_limit) return rho * vbar;
  double pstar = params.control.effective_penetration(lane);
  return rho * single_lane_asymptotic_speed(rho, pstar, params.mu, vbar);
}

FluxModel make_flux_model(HydroRegime regime, const ModelParams& params,
                          SumFluxVariant variant, bool kappa_zero_limit) {
  FluxModel model;
  model.regime = regime;
  if (regime == HydroRegime::Fast) {
    model.components = 1;
    model.admissible_max = 2.0;
    auto table = std::make_shared<ClosureTable>(build_closure_table(params, variant));
    model.flux = [table](int, double u) { return table->eval(u).F; };
    return model;
  }
  model.components = 2;
  model.admissible_max = 1.0;
  model.flux = [params, kappa_zero_limit](int comp, double u) {
    return flux_collision_dominated(u, comp, params, kappa_zero_limit);
  };
  if (regime == HydroRegime::Slow) {
    SwitchingSpec sw = params.switching;
    sw.beta = params.switching.regime_rates;
    model.source = [sw](double r1, double r2) {
      r1 = std::min(1.0, std::max(0.0, r1));
      r2 = std::min(1.0, std::max(0.0, r2));
      return density_rhs(r1, r2, sw);
    };
  }
  return model;
}

HydroState make_hydro_state(const InitialCondition& ic, const DiscretizationSpec& disc,
                            bool total_density) {
  HydroState s;
  s.x_min = disc.x_min;
  s.x_max = disc.x_max;
  s.nx = disc.nx;
  std::array<std::vector<double>, 2> rho;
  for (int lane = 0; lane < 2; ++lane) {
    rho[lane].assign(disc.nx, 0.0);
    for (const Box& b : ic.boxes[lane]) {
      double strength = b.value * (b.v1 - b.v0);
      for (int c = 0; c < disc.nx; ++c) {
        double cl = s.x_min + c * s.dx();
        double cr = cl + s.dx();
        double overlap = std::min(cr, b.x1) - std::max(cl, b.x0);
        if (overlap > 0.0) rho[lane][c] += strength * overlap / s.dx();
      }
    }
  }
  if (total_density) {
    s.u.resize(1);
    s.u[0].resize(disc.nx);
    for (int c = 0; c < disc.nx; ++c) s.u[0][c] = rho[0][c] + rho[1][c];
  } else {
    s.u = {rho[0], rho[1]};
  }
  return s;
}

double max_wave_speed(const FluxModel& model, const HydroState& state) {
  constexpr int kNodes = 2001;
  double lam = 0.0;
  for (int comp = 0; comp < state.components(); ++comp) {
    auto [lo_it, hi_it] = std::minmax_element(state.u[comp].begin(), state.u[comp].end());
    double lo = std::max(0.0, *lo_it - 0.05 * model.admissible_max);
    double hi = std::min(model.admissible_max, *hi_it + 0.05 * model.admissible_max);
    if (hi - lo < 1e-6) {
      lo = std::max(0.0, lo - 1e-6);
      hi = std::min(model.admissible_max, hi + 1e-6);
    }
    double h = (hi - lo) / (kNodes - 1);
    double prev = model.flux(comp, lo);
    for (int k = 1; k < kNodes; ++k) {
      double cur = model.flux(comp, lo + k * h);
      lam = std::max(lam, std::abs(cur - prev) / h);
      prev = cur;
    }
  }
  return lam;
}

HydroState fv_step(const HydroState& state, const FluxModel& model,
                   const DiscretizationSpec& disc, double dt, double lambda_max,
                   std::uint64_t* floored, int threads) {
  if (lambda_max > 0.0 && dt > disc.cfl * state.dx() / lambda_max * (1.0 + 1e-12))
    throw SolverError("fv_step: CFL violation");
  const int order = disc.order;
  HydroState out = state;
  if (order == 1) {
    auto k1 = stage_rhs(state, model, order, lambda_max, threads);
    out = axpy(state, 0.0, state, 1.0, k1, dt);
  } else if (order == 2) {
    auto k1 = stage_rhs(state, model, order, lambda_max, threads);
    HydroState u1 = axpy(state, 0.0, state, 1.0, k1, dt);
    auto k2 = stage_rhs(u1, model, order, lambda_max, threads);
    out = axpy(state, 0.5, u1, 0.5, k2, dt);
  } else {
    auto k1 = stage_rhs(state, model, order, lambda_max, threads);
    HydroState u1 = axpy(state, 0.0, state, 1.0, k1, dt);
    auto k2 = stage_rhs(u1, model, order, lambda_max, threads);
    HydroState u2 = axpy(state, 0.75, u1, 0.25, k2, dt);
    auto k3 = stage_rhs(u2, model, order, lambda_max, threads);
    out = axpy(state, 1.0 / 3.0, u2, 2.0 / 3.0, k3, dt);
  }
  out.time = state.time + dt;
  for (int comp = 0; comp < out.components(); ++comp) {
    for (int c = 0; c < out.nx; ++c) {
      double& v = out.u[comp][c];
      if (!std::isfinite(v))
        throw SolverError("fv_step: NaN in component " + std::to_string(comp) +
                          ", cell " + std::to_string(c));
      if (v < 0.0) {
        v = 0.0;
        if (floored) ++*floored;
      }
    }
  }
  return out;
}

HydroResult fv_advance(const HydroState& s0, const FluxModel& model,
                       const DiscretizationSpec& disc, double until,
                       const std::vector<double>& snapshot_times, int threads) {
  std::vector<double> snaps = snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  HydroResult res;
  HydroState cur = s0;
  std::size_t si = 0;
  const double tol = 1e-12;
  while (si < snaps.size() && snaps[si] <= cur.time + tol) {
    res.snapshots.emplace_back(cur.time, cur);
    ++si;
  }
  while (cur.time < until - tol) {
    double lam = max_wave_speed(model, cur);
    res.lambda_history.push_back(lam);
    double dt = lam > 0.0 ? disc.cfl * cur.dx() / lam : until - cur.time;
    double stop = until;
    if (si < snaps.size()) stop = std::min(stop, snaps[si]);
    dt = std::min(dt, stop - cur.time);
    cur = fv_step(cur, model, disc, dt, lam, &res.floored_cells, threads);
    ++res.steps;
    while (si < snaps.size() && snaps[si] <= cur.time + tol) {
      res.snapshots.emplace_back(cur.time, cur);
      ++si;
    }
  }
  return res;
}

}  // namespace traffic
