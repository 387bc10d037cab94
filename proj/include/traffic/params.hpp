#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "traffic/errors.hpp"

namespace traffic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Recommended speed profile vbar(rho), mapping [0,1] -> [0,1].
struct SpeedProfile {
  enum class Kind { Constant, Linear };
  Kind kind = Kind::Linear;
  double value = 0.5;  // used by Constant

  double operator()(double rho) const {
    return kind == Kind::Constant ? value : 1.0 - rho;
  }
};

// Diffusion amplitude a(rho) >= 0.
struct DiffusionProfile {
  enum class Kind { Constant, Table };
  Kind kind = Kind::Constant;
  double value = 0.0;
  std::vector<double> rho_nodes;  // ascending, used by Table
  std::vector<double> values;

  double operator()(double rho) const;
};

struct ControlSpec {
  double p = 0.0;                                   // penetration rate
  std::array<double, 2> kappa{kInf, kInf};          // +inf encodes "uncontrolled"
  std::array<SpeedProfile, 2> recommended_speed{};

  // p* = p/kappa; exactly 0 for kappa = +inf
  double effective_penetration(int lane) const {
    if (!std::isfinite(kappa[lane]) || p == 0.0) return 0.0;
    return p / kappa[lane];
  }
  void validate() const;
};

struct NoiseSpec {
  enum class Law { Uniform };
  std::array<double, 2> lambda{0.0, 0.0};  // scaled variances, sigma_i^2 = gamma*lambda_i
  DiffusionProfile a;
  Law distribution = Law::Uniform;

  void validate() const;
};

struct VelocityCoupling {
  double a_offset = 0.2;  // in (0,1)
};

struct SwitchingSpec {
  std::array<double, 2> beta{0.0, 0.0};
  double alpha = 1.0;
  std::array<double, 2> regime_rates{0.0, 0.0};  // c_1, c_2 for slow-switching hydro
  std::optional<VelocityCoupling> velocity_coupling;

  void validate() const;
};

struct ModelParams {
  double gamma = 1e-3;  // in (0,1]
  double mu = 2.0;      // exponent of the acceleration probability
  ControlSpec control;
  NoiseSpec noise;
  SwitchingSpec switching;

  // nu_i = kappa_i * gamma (+inf stays +inf)
  double nu(int lane) const {
    double k = control.kappa[lane];
    return std::isfinite(k) ? k * gamma : kInf;
  }
  void validate() const;
};

struct Box {
  double x0 = 0.0, x1 = 0.0;  // space interval
  double v0 = 0.0, v1 = 0.0;  // speed interval
  double value = 0.0;         // phase-space density on the box
};

struct InitialCondition {
  std::array<std::vector<Box>, 2> boxes;  // per lane

  static InitialCondition test1();
  static InitialCondition test2();
  void validate(double x_min, double x_max) const;
};

struct DiscretizationSpec {
  double x_min = -2.0, x_max = 2.0;
  int nx = 21;
  int nv = 128;
  double dt = 1e-3;
  std::int64_t particles = 200000;
  double cfl = 0.5;
  int order = 1;  // reconstruction order: 1, 2 or 5

  double dx() const { return (x_max - x_min) / nx; }
  void validate() const;
};

enum class ExperimentKind { Homogeneous, Diagram, Dsmc, Hydro, Compare };
enum class HydroRegime { Collision, Fast, Slow };
enum class TimeScale { Original, Scaled };
enum class SumFluxVariant { RhoWeighted, MeanSum };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Homogeneous;
  DiscretizationSpec discretization;
  InitialCondition initial_condition;
  double epsilon = 1e-3;
  std::vector<double> epsilon_list;  // compare
  HydroRegime hydro_regime = HydroRegime::Slow;
  double final_time = 1.0;
  std::uint64_t seed = 0;

  // homogeneous moment runs
  std::array<double, 2> rho0{0.2, 0.8};
  std::array<double, 2> m0{0.5, 0.5};
  std::array<double, 2> E0{0.3, 0.3};
  TimeScale time_scale = TimeScale::Scaled;
  bool include_asymptotes = false;

  // diagram runs
  std::vector<double> rho_grid;
  std::vector<double> kappa_list;  // +inf entries allowed

  std::vector<double> snapshots;
  bool phase_histogram = false;
  SumFluxVariant sum_flux = SumFluxVariant::RhoWeighted;
  bool kappa_zero_limit = false;  // hydro flux rho*vbar(rho) instead of rho*m_inf

  void validate() const;
};

// Parses a JSON config document. Unknown keys are hard errors; omitted
// optional fields take the documented defaults.
std::pair<ModelParams, ExperimentSpec> load_config(const std::string& text);

// Inverse of load_config for the parameter block (round-trip identity).
std::string serialize_config(const ModelParams& params, const ExperimentSpec& exp);

struct LaneAdmissibility {
  double eta_bound = 0.0;        // c_i (1 - ((nu_i+gamma)/nu_i) gamma)
  double noise_half_width = 0.0; // support half-width of the configured eta law
  bool noise_ok = false;
  bool diffusion_ok = false;     // c_i D(v,rho) <= min(v, 1-v) on the grid
  int violations = 0;            // grid points failing the diffusion bound
  double v_lo = 0.0, v_hi = 0.0; // v-range of flagged points
};

struct AdmissibilityReport {
  std::array<LaneAdmissibility, 2> lane;
};

// Report-only check of the control-admissibility bounds; violations are
// warnings, runtime sampling safeguards handle them.
AdmissibilityReport validate_admissibility(const ModelParams& params,
                                           std::array<double, 2> c = {1.0, 1.0});

}  // namespace traffic
