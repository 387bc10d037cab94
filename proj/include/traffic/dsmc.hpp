#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "traffic/params.hpp"

namespace traffic {

struct EnsembleDiagnostics {
  std::uint64_t interactions = 0;
  std::uint64_t rejections = 0;  // post-interaction speed left [0,1]
  std::uint64_t switches = 0;
  std::uint64_t outflow = 0;
  std::uint64_t empty_cell_beta = 0;  // velocity-coupled beta hit the m=0 convention
};

// Labeled microscopic particles. All arrays share the same length; lane
// labels are 0/1. The common weight is (initial total mass)/N.
struct ParticleEnsemble {
  std::vector<double> x;
  std::vector<double> v;
  std::vector<std::uint8_t> lane;
  double weight = 0.0;
  EnsembleDiagnostics diag;

  std::size_t size() const { return x.size(); }
};

// Gridded per-lane densities and mean speeds reconstructed from particles.
struct MacroField {
  double x_min = -2.0, x_max = 2.0;
  int nx = 21;
  int nv = 0;  // > 0 when the phase histogram is present
  std::array<std::vector<double>, 2> rho;
  std::array<std::vector<double>, 2> m;
  std::array<std::vector<double>, 2> phase;  // nx*nv row-major (x outer)

  double dx() const { return (x_max - x_min) / nx; }
  int cell_of(double xq) const {
    int c = static_cast<int>((xq - x_min) / dx());
    return std::min(nx - 1, std::max(0, c));
  }
};

// Samples particles box-by-box, counts proportional to box masses.
ParticleEnsemble init_ensemble(const InitialCondition& ic, const DiscretizationSpec& disc,
                               std::uint64_t seed);

// Histogram densities and per-(cell,lane) mean speeds (0 for empty cells).
MacroField reconstruct_moments(const ParticleEnsemble& ens, const DiscretizationSpec& disc,
                               bool phase_histogram = false);

// Nanbu collision step: within each (cell, lane), each particle interacts with
// probability 1 - exp(-rho_hat dt/eps); interacting particles are randomly
// paired and one member of each pair is updated (the field particle never
// changes). threads <= 0 runs the sequential reference; any thread count
// produces bit-identical results.
void collision_step(ParticleEnsemble& ens, double dt, double epsilon,
                    const ModelParams& params, const MacroField& field,
                    std::uint64_t seed, std::uint64_t step, int threads = 0);

// Free transport; particles leaving the domain are removed and counted.
void transport_step(ParticleEnsemble& ens, double dt, const DiscretizationSpec& disc);

// Label-flip lane changes with per-cell probability
// 1 - exp(-(beta_l/eps) (1-rho_other)^alpha dt); switching shares the kinetic
// 1/eps timescale with the collisions.
void lane_switch_step(ParticleEnsemble& ens, double dt, const SwitchingSpec& sw,
                      const MacroField& field, std::uint64_t seed, std::uint64_t step,
                      double epsilon, int threads = 0);

// beta_i = eps / (|m1 - m2| + a_offset), identical for both lanes; empty
// lanes use the m = 0 convention.
std::vector<double> velocity_dependent_betas(const MacroField& field, double epsilon,
                                             double a_offset);

struct DsmcResult {
  std::vector<std::pair<double, MacroField>> snapshots;
  EnsembleDiagnostics diagnostics;
  double wall_seconds = 0.0;
};

// Operator-splitting loop: reconstruct -> collide -> transport -> switch.
DsmcResult run_dsmc(const ExperimentSpec& exp, const ModelParams& params, int threads = 0);

}  // namespace traffic
