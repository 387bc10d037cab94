#include <cmath>
#include <cstddef>
#include <numeric>

#include "doctest.h"
#include "traffic/dsmc.hpp"

using namespace traffic;

namespace {

DiscretizationSpec disc_default(std::int64_t particles, int nx = 40) {
  DiscretizationSpec d;
  d.x_min = -2.0;
  d.x_max = 2.0;
  d.nx = nx;
  d.particles = particles;
  return d;
}

ModelParams plain_params() {
  ModelParams p;
  p.gamma = 0.1;
  p.mu = 2.0;
  return p;
}

MacroField uniform_field(double rho1, double rho2, double m1, double m2, int nx = 4) {
  MacroField f;
  f.x_min = -2.0;
  f.x_max = 2.0;
  f.nx = nx;
  f.rho[0].assign(nx, rho1);
  f.rho[1].assign(nx, rho2);
  f.m[0].assign(nx, m1);
  f.m[1].assign(nx, m2);
  return f;
}

}  // namespace

TEST_CASE("initialization splits the built-in data as documented") {
  auto ens = init_ensemble(InitialCondition::test1(), disc_default(100000), 7);
  REQUIRE(ens.size() == 100000);
  CHECK(ens.weight == doctest::Approx(2.0 / 100000).epsilon(1e-14));
  std::size_t lane1 = 0;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (ens.lane[i] == 0) {
      ++lane1;
      CHECK(ens.x[i] >= -1.0);
      CHECK(ens.x[i] <= 0.0);
    } else {
      CHECK(ens.x[i] >= -2.0);
      CHECK(ens.x[i] <= -1.0);
    }
    CHECK(ens.v[i] >= 0.0);
    CHECK(ens.v[i] <= 0.5);
  }
  CHECK(lane1 == 50000);  // equal box masses, exact split

  auto ens2 = init_ensemble(InitialCondition::test2(), disc_default(10000), 7);
  std::size_t left = 0, lane1_n = 0;
  for (std::size_t i = 0; i < ens2.size(); ++i) {
    if (ens2.lane[i] == 0) {
      ++lane1_n;
      CHECK(ens2.v[i] <= 0.5);
      if (ens2.x[i] < 0.0) ++left;
    } else {
      CHECK(ens2.v[i] >= 0.5);
    }
  }
  CHECK(lane1_n == 5000);
  CHECK(left == 4000);  // 0.8 / 0.2 mass split within the lane
}

TEST_CASE("initialization is deterministic per seed") {
  auto a = init_ensemble(InitialCondition::test1(), disc_default(5000), 42);
  auto b = init_ensemble(InitialCondition::test1(), disc_default(5000), 42);
  CHECK(a.x == b.x);
  CHECK(a.v == b.v);
  auto c = init_ensemble(InitialCondition::test1(), disc_default(5000), 43);
  CHECK(a.x != c.x);
}

TEST_CASE("zero-mass initial data is rejected") {
  InitialCondition ic;
  ic.boxes[0].push_back({0.0, 0.0, 0.0, 0.5, 1.0});  // zero-width box
  CHECK_THROWS_AS(init_ensemble(ic, disc_default(100), 1), ValidationError);
}

TEST_CASE("reconstruction reproduces the initial block profile") {
  DiscretizationSpec d = disc_default(200000);
  auto ens = init_ensemble(InitialCondition::test1(), d, 3);
  MacroField f = reconstruct_moments(ens, d);
  // lane densities integrate back to the box masses
  double mass1 = 0.0, mass2 = 0.0;
  for (int c = 0; c < d.nx; ++c) {
    mass1 += f.rho[0][c] * f.dx();
    mass2 += f.rho[1][c] * f.dx();
  }
  CHECK(mass1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mass2 == doctest::Approx(1.0).epsilon(1e-12));
  // cells inside (-1,0) carry lane-1 density 1 up to sampling noise
  for (int c = 0; c < d.nx; ++c) {
    double xc = f.x_min + (c + 0.5) * f.dx();
    if (xc > -1.0 && xc < 0.0) {
      CHECK(f.rho[0][c] == doctest::Approx(1.0).epsilon(0.05));
      CHECK(f.m[0][c] == doctest::Approx(0.25).epsilon(0.1));
      CHECK(f.rho[1][c] == 0.0);
      CHECK(f.m[1][c] == 0.0);  // empty-cell convention
    }
  }
}

TEST_CASE("collisions vanish in the collisionless limit") {
  DiscretizationSpec d = disc_default(20000);
  auto ens = init_ensemble(InitialCondition::test1(), d, 5);
  MacroField f = reconstruct_moments(ens, d);
  auto v0 = ens.v;
  collision_step(ens, 1e-3, 1e12, plain_params(), f, 5, 0);
  CHECK(ens.v == v0);
  CHECK(ens.diag.interactions == 0);
}

TEST_CASE("collision step touches only speeds and conserves the count") {
  DiscretizationSpec d = disc_default(20000);
  auto ens = init_ensemble(InitialCondition::test1(), d, 5);
  MacroField f = reconstruct_moments(ens, d);
  auto x0 = ens.x;
  auto lane0 = ens.lane;
  std::size_t n0 = ens.size();
  collision_step(ens, 1e-2, 1e-3, plain_params(), f, 5, 0);
  CHECK(ens.size() == n0);
  CHECK(ens.x == x0);
  CHECK(ens.lane == lane0);
  CHECK(ens.diag.interactions > 0);
  // all post-interaction speeds stay admissible
  for (double v : ens.v) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("collision step is thread-count independent") {
  DiscretizationSpec d = disc_default(50000);
  auto seq = init_ensemble(InitialCondition::test1(), d, 11);
  auto par = init_ensemble(InitialCondition::test1(), d, 11);
  MacroField f = reconstruct_moments(seq, d);
  ModelParams p = plain_params();
  p.control.p = 0.3;
  p.control.kappa = {0.05, 0.05};
  p.noise.lambda = {1.0, 1.0};
  p.noise.a.kind = DiffusionProfile::Kind::Constant;
  p.noise.a.value = 0.5;
  for (std::uint64_t step = 0; step < 5; ++step) {
    collision_step(seq, 1e-2, 1e-3, p, f, 11, step, 0);
    collision_step(par, 1e-2, 1e-3, p, f, 11, step, 8);
  }
  CHECK(seq.v == par.v);
  CHECK(seq.diag.interactions == par.diag.interactions);
  CHECK(seq.diag.rejections == par.diag.rejections);
}

TEST_CASE("transport moves particles ballistically and counts outflow") {
  DiscretizationSpec d = disc_default(10000);
  auto ens = init_ensemble(InitialCondition::test1(), d, 9);
  auto x0 = ens.x;
  transport_step(ens, 0.0, d);
  CHECK(ens.x == x0);

  // small step: max speed 0.5 starting left of 0, nobody reaches the boundary
  transport_step(ens, 0.1, d);
  CHECK(ens.size() == 10000);
  CHECK(ens.diag.outflow == 0);
  for (std::size_t i = 0; i < ens.size(); ++i)
    CHECK(ens.x[i] == doctest::Approx(x0[i] + 0.1 * ens.v[i]).epsilon(1e-15));

  // huge step: everybody with positive speed leaves through x = 2
  std::size_t moving = 0;
  for (double v : ens.v)
    if (v > 0.0) ++moving;
  transport_step(ens, 1e6, d);
  CHECK(ens.diag.outflow == moving);
}

TEST_CASE("lane switching respects the rate and saturation limits") {
  DiscretizationSpec d = disc_default(20000, 4);
  auto ens = init_ensemble(InitialCondition::test1(), d, 13);

  SwitchingSpec off;
  off.beta = {0.0, 0.0};
  auto lanes0 = ens.lane;
  lane_switch_step(ens, 1e-2, off, uniform_field(0.3, 0.3, 0.4, 0.4), 13, 0, 1e-3);
  CHECK(ens.lane == lanes0);
  CHECK(ens.diag.switches == 0);

  // a full target lane blocks all switching regardless of beta
  SwitchingSpec blocked;
  blocked.beta = {5.0, 5.0};
  blocked.alpha = 2.0;
  lane_switch_step(ens, 1e-2, blocked, uniform_field(1.0, 1.0, 0.4, 0.4), 13, 1, 1e-3);
  CHECK(ens.lane == lanes0);

  // an enormous rate into an empty lane flips everyone
  SwitchingSpec full;
  full.beta = {1e6, 1e6};
  lane_switch_step(ens, 1.0, full, uniform_field(0.0, 0.0, 0.0, 0.0), 13, 2, 1.0);
  for (std::size_t i = 0; i < ens.size(); ++i) CHECK(ens.lane[i] == 1 - lanes0[i]);
}

TEST_CASE("lane switching is thread-count independent") {
  DiscretizationSpec d = disc_default(50000);
  auto seq = init_ensemble(InitialCondition::test1(), d, 21);
  auto par = init_ensemble(InitialCondition::test1(), d, 21);
  MacroField f = reconstruct_moments(seq, d);
  SwitchingSpec sw;
  sw.beta = {0.1, 0.2};
  sw.alpha = 1.0;
  for (std::uint64_t step = 0; step < 5; ++step) {
    lane_switch_step(seq, 1e-2, sw, f, 21, step, 1e-2, 0);
    lane_switch_step(par, 1e-2, sw, f, 21, step, 1e-2, 8);
  }
  CHECK(seq.lane == par.lane);
  CHECK(seq.diag.switches == par.diag.switches);
}

TEST_CASE("lane masses relax to the switching equilibrium") {
  // homogeneous state, total density 1: beta = (0.1, 0.2), alpha = 1 drives
  // the lane-1 share to sqrt(2)/(1+sqrt(2))
  DiscretizationSpec d = disc_default(40000, 8);
  InitialCondition ic;
  ic.boxes[0].push_back({-2.0, 2.0, 0.0, 1.0, 0.2});
  ic.boxes[1].push_back({-2.0, 2.0, 0.0, 1.0, 0.8});
  auto ens = init_ensemble(ic, d, 31);
  SwitchingSpec sw;
  sw.beta = {0.1, 0.2};
  sw.alpha = 1.0;
  const double eps = 1.0, dt = 0.05;
  for (std::uint64_t step = 0; step < 2000; ++step) {
    MacroField f = reconstruct_moments(ens, d);
    lane_switch_step(ens, dt, sw, f, 31, step, eps);
  }
  double lane1 = 0.0;
  for (auto l : ens.lane) lane1 += (l == 0);
  double share = lane1 / double(ens.size());
  double target = std::sqrt(2.0) / (1.0 + std::sqrt(2.0));
  CHECK(std::abs(share - target) <= 0.01);
}

TEST_CASE("velocity-coupled rates follow the speed gap") {
  const double eps = 1e-3, a_off = 0.2;
  auto f = uniform_field(0.5, 0.5, 0.9, 0.1);
  auto b = velocity_dependent_betas(f, eps, a_off);
  for (double bi : b) CHECK(bi == doctest::Approx(eps).epsilon(1e-14));
  f = uniform_field(0.5, 0.5, 0.25, 0.75);
  b = velocity_dependent_betas(f, eps, a_off);
  for (double bi : b) CHECK(bi == doctest::Approx(eps / 0.7).epsilon(1e-14));
  // empty lane: the m = 0 convention applies
  f = uniform_field(0.5, 0.0, 0.3, 0.0);
  b = velocity_dependent_betas(f, eps, a_off);
  for (double bi : b) CHECK(bi == doctest::Approx(eps / 0.5).epsilon(1e-14));
}

TEST_CASE("full splitting runs are reproducible and thread independent") {
  ExperimentSpec exp;
  exp.kind = ExperimentKind::Dsmc;
  exp.initial_condition = InitialCondition::test1();
  exp.epsilon = 1e-2;
  exp.final_time = 0.05;
  exp.seed = 99;
  exp.discretization = disc_default(30000);
  exp.discretization.dt = 1e-2;
  ModelParams p = plain_params();
  p.switching.beta = {0.02, 0.02};
  p.switching.alpha = 2.0;

  auto r1 = run_dsmc(exp, p, 0);
  auto r2 = run_dsmc(exp, p, 0);
  auto r3 = run_dsmc(exp, p, 8);
  REQUIRE(r1.snapshots.size() == 1);
  for (auto* other : {&r2, &r3}) {
    REQUIRE(other->snapshots.size() == 1);
    for (int lane = 0; lane < 2; ++lane) {
      CHECK(r1.snapshots[0].second.rho[lane] == other->snapshots[0].second.rho[lane]);
      CHECK(r1.snapshots[0].second.m[lane] == other->snapshots[0].second.m[lane]);
    }
  }
  CHECK(r1.diagnostics.interactions == r3.diagnostics.interactions);
  CHECK(r1.diagnostics.switches == r3.diagnostics.switches);
}
