#pragma once

#include <string>
#include <vector>

#include "traffic/dsmc.hpp"
#include "traffic/hydro.hpp"
#include "traffic/params.hpp"

namespace traffic {

struct RunResult {
  std::vector<std::string> files;  // paths written, relative to out_dir
  double wall_seconds = 0.0;
};

RunResult cmd_homogeneous(const ModelParams& params, const ExperimentSpec& exp,
                          const std::string& out_dir);
RunResult cmd_diagram(const ModelParams& params, const ExperimentSpec& exp,
                      const std::string& out_dir);
RunResult cmd_dsmc(const ModelParams& params, const ExperimentSpec& exp,
                   const std::string& out_dir, int threads);
RunResult cmd_hydro(const ModelParams& params, const ExperimentSpec& exp,
                    const std::string& out_dir, int threads);
RunResult cmd_compare(const ModelParams& params, const ExperimentSpec& exp,
                      const std::string& out_dir, int threads);

// Dispatches on exp.kind and writes manifest.json (config snapshot, content
// hash, seed, file list, wall time) alongside the outputs.
RunResult run_experiment(const ModelParams& params, const ExperimentSpec& exp,
                         const std::string& out_dir, int threads);

// Sum over cells of |rho_a - rho_b| * dx; the grids must agree in size.
double l1_density_error(const std::vector<double>& a, const std::vector<double>& b,
                        double dx);

// Cell-averages a fine hydro profile onto a coarse grid (fine nx = coarse nx * k).
std::vector<double> aggregate_cells(const std::vector<double>& fine, int factor);

}  // namespace traffic
