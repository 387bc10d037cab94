#include "traffic/dsmc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "traffic/micro.hpp"
#include "traffic/rng.hpp"

namespace traffic {

namespace {

constexpr std::uint64_t kInitTag = 0x1117;
constexpr std::uint64_t kCollideTag = 0xC011;
constexpr std::uint64_t kSwitchTag = 0x5317;

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

void parallel_over(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

// Interaction coefficients frozen per (cell, lane, step). The update below is
// operation-for-operation the same as post_interaction_speed so that the two
// paths are bit-identical.
struct CollisionCtx {
  double P = 0.0;
  double vbar = 0.0;
  double a_rho = 0.0;
  double gamma = 0.0;
  double sigma2 = 0.0;  // gamma * lambda
  double p = 0.0;
  bool controlled = false;  // nu finite
  double coef_I[2] = {0.0, 0.0};
  double coef_ctrl[2] = {0.0, 0.0};
};

CollisionCtx make_ctx(double rho_hat, const ModelParams& params, int lane) {
  CollisionCtx c;
  c.P = std::pow(1.0 - rho_hat, params.mu);
  c.vbar = params.control.recommended_speed[lane](rho_hat);
  c.a_rho = params.noise.a(rho_hat);
  c.gamma = params.gamma;
  c.sigma2 = params.gamma * params.noise.lambda[lane];
  c.p = params.control.p;
  double nu = params.nu(lane);
  c.controlled = std::isfinite(nu);
  if (c.controlled) {
    for (int theta = 0; theta < 2; ++theta) {
      double theta2 = double(theta) * double(theta);
      double denom = nu + c.gamma * c.gamma * theta2;
      c.coef_I[theta] = nu * c.gamma / denom;
      c.coef_ctrl[theta] = c.gamma * c.gamma * theta2 / denom;
    }
  } else {
    c.coef_I[0] = c.coef_I[1] = c.gamma;
    c.coef_ctrl[0] = c.coef_ctrl[1] = 0.0;
  }
  return c;
}

}  // namespace

ParticleEnsemble init_ensemble(const InitialCondition& ic, const DiscretizationSpec& disc,
                               std::uint64_t seed) {
  struct BoxRef {
    int lane;
    const Box* box;
    double mass;
  };
  std::vector<BoxRef> refs;
  double total_mass = 0.0;
  for (int lane = 0; lane < 2; ++lane) {
    for (const Box& b : ic.boxes[lane]) {
      double mass = b.value * (b.x1 - b.x0) * (b.v1 - b.v0);
      refs.push_back({lane, &b, mass});
      total_mass += mass;
    }
  }
  if (!(total_mass > 0.0))
    throw ValidationError("init_ensemble: initial condition has zero total mass");

  const auto n_total = static_cast<std::size_t>(disc.particles);
  // largest-remainder apportionment of particles to boxes
  std::vector<std::size_t> counts(refs.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    double exact = double(n_total) * refs[k].mass / total_mass;
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.push_back({exact - std::floor(exact), k});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n_total; ++r, ++assigned)
    ++counts[remainders[r % remainders.size()].second];

  ParticleEnsemble ens;
  ens.weight = total_mass / double(n_total);
  ens.x.reserve(n_total);
  ens.v.reserve(n_total);
  ens.lane.reserve(n_total);
  for (std::size_t k = 0; k < refs.size(); ++k) {
    CounterRng rng(CounterRng::derive(seed, kInitTag, k));
    const Box& b = *refs[k].box;
    for (std::size_t i = 0; i < counts[k]; ++i) {
      ens.x.push_back(rng.uniform(b.x0, b.x1));
      ens.v.push_back(rng.uniform(b.v0, b.v1));
      ens.lane.push_back(static_cast<std::uint8_t>(refs[k].lane));
    }
  }
  return ens;
}

MacroField reconstruct_moments(const ParticleEnsemble& ens, const DiscretizationSpec& disc,
                               bool phase_histogram) {
  MacroField f;
  f.x_min = disc.x_min;
  f.x_max = disc.x_max;
  f.nx = disc.nx;
  f.nv = phase_histogram ? disc.nv : 0;
  const double dx = f.dx();
  for (int lane = 0; lane < 2; ++lane) {
    f.rho[lane].assign(disc.nx, 0.0);
    f.m[lane].assign(disc.nx, 0.0);
    if (phase_histogram) f.phase[lane].assign(std::size_t(disc.nx) * disc.nv, 0.0);
  }
  std::array<std::vector<double>, 2> vsum;
  std::array<std::vector<std::size_t>, 2> count;
  for (int lane = 0; lane < 2; ++lane) {
    vsum[lane].assign(disc.nx, 0.0);
    count[lane].assign(disc.nx, 0);
  }
  const double dv = 1.0 / std::max(1, disc.nv);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    int c = f.cell_of(ens.x[i]);
    int lane = ens.lane[i];
    vsum[lane][c] += ens.v[i];
    ++count[lane][c];
    if (phase_histogram) {
      int iv = std::min(disc.nv - 1, std::max(0, int(ens.v[i] / dv)));
      f.phase[lane][std::size_t(c) * disc.nv + iv] += 1.0;
    }
  }
  for (int lane = 0; lane < 2; ++lane) {
    for (int c = 0; c < disc.nx; ++c) {
      f.rho[lane][c] = ens.weight * double(count[lane][c]) / dx;
      f.m[lane][c] = count[lane][c] ? vsum[lane][c] / double(count[lane][c]) : 0.0;
    }
    if (phase_histogram)
      for (double& val : f.phase[lane]) val *= ens.weight / (dx * dv);
  }
  return f;
}

void collision_step(ParticleEnsemble& ens, double dt, double epsilon,
                    const ModelParams& params, const MacroField& field,
                    std::uint64_t seed, std::uint64_t step, int threads) {
  const std::size_t n = ens.size();
  const int buckets = field.nx * 2;

  // stable counting sort of particle indices by (cell, lane)
  std::vector<std::uint32_t> key(n);
  std::vector<std::uint32_t> count(buckets, 0);
  for (std::size_t i = 0; i < n; ++i) {
    key[i] = std::uint32_t(field.cell_of(ens.x[i])) * 2u + ens.lane[i];
    ++count[key[i]];
  }
  std::vector<std::uint32_t> offset(buckets + 1, 0);
  for (int b = 0; b < buckets; ++b) offset[b + 1] = offset[b] + count[b];
  std::vector<std::uint32_t> order(n);
  {
    std::vector<std::uint32_t> pos(offset.begin(), offset.end() - 1);
    for (std::size_t i = 0; i < n; ++i) order[pos[key[i]]++] = std::uint32_t(i);
  }

  std::atomic<std::uint64_t> interactions{0}, rejections{0};
  double* v = ens.v.data();

  auto work = [&](int b) {
    const std::uint32_t lo = offset[b], hi = offset[b + 1];
    if (hi == lo) return;
    const int cell = b / 2;
    const int lane = b % 2;
    const double rho_hat = clamp01(field.rho[lane][cell]);
    const double p_int = -std::expm1(-rho_hat * dt / epsilon);
    CounterRng rng(CounterRng::derive(seed, kCollideTag, step, std::uint64_t(b)));

    std::vector<std::uint32_t> selected;
    selected.reserve(hi - lo);
    for (std::uint32_t k = lo; k < hi; ++k)
      if (rng.bernoulli(p_int)) selected.push_back(order[k]);
    for (std::size_t k = selected.size(); k > 1; --k)
      std::swap(selected[k - 1], selected[rng.index(k)]);

    const CollisionCtx ctx = make_ctx(rho_hat, params, lane);
    std::uint64_t local_inter = 0, local_rej = 0;
    for (std::size_t k = 0; k + 1 < selected.size(); k += 2) {
      const std::uint32_t i = selected[k];
      const std::uint32_t j = selected[k + 1];
      const int theta = rng.bernoulli(ctx.p) ? 1 : 0;
      const double eta = ctx.sigma2 > 0.0 ? rng.symmetric_uniform(ctx.sigma2) : 0.0;
      const double vi = v[i];
      const double I = ctx.P * (1.0 - vi) + (1.0 - ctx.P) * (ctx.P * v[j] - vi);
      const double D = ctx.a_rho * std::sqrt(std::max(0.0, vi * (1.0 - vi)));
      const double vprime =
          vi + ctx.coef_I[theta] * I + ctx.coef_ctrl[theta] * (ctx.vbar - vi) + D * eta;
      ++local_inter;
      if (vprime < 0.0 || vprime > 1.0) {
        ++local_rej;  // interaction discarded, speed unchanged
      } else {
        v[i] = vprime;
      }
    }
    interactions.fetch_add(local_inter, std::memory_order_relaxed);
    rejections.fetch_add(local_rej, std::memory_order_relaxed);
  };
  parallel_over(buckets, threads, work);

  ens.diag.interactions += interactions.load();
  ens.diag.rejections += rejections.load();
}

void transport_step(ParticleEnsemble& ens, double dt, const DiscretizationSpec& disc) {
  std::size_t keep = 0;
  const std::size_t n = ens.size();
  for (std::size_t i = 0; i < n; ++i) {
    double xn = ens.x[i] + ens.v[i] * dt;
    if (xn >= disc.x_min && xn <= disc.x_max) {
      ens.x[keep] = xn;
      ens.v[keep] = ens.v[i];
      ens.lane[keep] = ens.lane[i];
      ++keep;
    } else {
      ++ens.diag.outflow;
    }
  }
  ens.x.resize(keep);
  ens.v.resize(keep);
  ens.lane.resize(keep);
}

std::vector<double> velocity_dependent_betas(const MacroField& field, double epsilon,
                                             double a_offset) {
  std::vector<double> betas(field.nx);
  for (int c = 0; c < field.nx; ++c) {
    double m1 = field.m[0][c];  // 0 by convention in empty cells
    double m2 = field.m[1][c];
    betas[c] = epsilon / (std::abs(m1 - m2) + a_offset);
  }
  return betas;
}

void lane_switch_step(ParticleEnsemble& ens, double dt, const SwitchingSpec& sw,
                      const MacroField& field, std::uint64_t seed, std::uint64_t step,
                      double epsilon, int threads) {
  const std::size_t n = ens.size();
  const int nx = field.nx;

  std::vector<std::uint32_t> count(nx, 0);
  std::vector<std::uint32_t> cell(n);
  for (std::size_t i = 0; i < n; ++i) {
    cell[i] = std::uint32_t(field.cell_of(ens.x[i]));
    ++count[cell[i]];
  }
  std::vector<std::uint32_t> offset(nx + 1, 0);
  for (int c = 0; c < nx; ++c) offset[c + 1] = offset[c] + count[c];
  std::vector<std::uint32_t> order(n);
  {
    std::vector<std::uint32_t> pos(offset.begin(), offset.end() - 1);
    for (std::size_t i = 0; i < n; ++i) order[pos[cell[i]]++] = std::uint32_t(i);
  }

  std::vector<double> coupled_betas;
  if (sw.velocity_coupling)
    coupled_betas = velocity_dependent_betas(field, epsilon, sw.velocity_coupling->a_offset);

  std::atomic<std::uint64_t> switches{0}, empty_beta{0};
  std::uint8_t* lane = ens.lane.data();

  auto work = [&](int c) {
    const std::uint32_t lo = offset[c], hi = offset[c + 1];
    if (hi == lo) return;
    double flip_prob[2];
    std::uint64_t local_empty = 0;
    for (int l = 0; l < 2; ++l) {
      double beta = sw.velocity_coupling ? coupled_betas[c] : sw.beta[l];
      double rho_other = clamp01(field.rho[1 - l][c]);
      // switching sits on the kinetic 1/eps timescale like the collisions,
      // so beta = O(eps) produces O(1) macroscopic exchange rates
      flip_prob[l] =
          -std::expm1(-beta / epsilon * std::pow(1.0 - rho_other, sw.alpha) * dt);
    }
    if (sw.velocity_coupling) {
      bool e1 = field.rho[0][c] <= 0.0, e2 = field.rho[1][c] <= 0.0;
      if (e1 != e2) ++local_empty;  // m = 0 convention in play for this cell
    }
    CounterRng rng(CounterRng::derive(seed, kSwitchTag, step, std::uint64_t(c)));
    std::uint64_t local_switches = 0;
    for (std::uint32_t k = lo; k < hi; ++k) {
      std::uint32_t i = order[k];
      if (rng.bernoulli(flip_prob[lane[i]])) {
        lane[i] = std::uint8_t(1 - lane[i]);
        ++local_switches;
      }
    }
    switches.fetch_add(local_switches, std::memory_order_relaxed);
    empty_beta.fetch_add(local_empty, std::memory_order_relaxed);
  };
  parallel_over(nx, threads, work);

  ens.diag.switches += switches.load();
  ens.diag.empty_cell_beta += empty_beta.load();
}

DsmcResult run_dsmc(const ExperimentSpec& exp, const ModelParams& params, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const DiscretizationSpec& disc = exp.discretization;
  ParticleEnsemble ens = init_ensemble(exp.initial_condition, disc, exp.seed);

  const double dt = disc.dt;
  const auto steps = static_cast<std::uint64_t>(std::llround(exp.final_time / dt));
  std::vector<double> snaps = exp.snapshots;
  if (snaps.empty()) snaps.push_back(exp.final_time);
  std::sort(snaps.begin(), snaps.end());

  DsmcResult result;
  std::size_t si = 0;
  while (si < snaps.size() && snaps[si] <= 1e-12) {
    result.snapshots.emplace_back(0.0, reconstruct_moments(ens, disc, exp.phase_histogram));
    ++si;
  }
  for (std::uint64_t step = 0; step < steps; ++step) {
    MacroField field = reconstruct_moments(ens, disc, false);
    collision_step(ens, dt, exp.epsilon, params, field, exp.seed, step, threads);
    transport_step(ens, dt, disc);
    lane_switch_step(ens, dt, params.switching, field, exp.seed, step, exp.epsilon, threads);
    const double t = double(step + 1) * dt;
    while (si < snaps.size() && snaps[si] <= t + 1e-12) {
      result.snapshots.emplace_back(t, reconstruct_moments(ens, disc, exp.phase_histogram));
      ++si;
    }
  }
  result.diagnostics = ens.diag;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace traffic
