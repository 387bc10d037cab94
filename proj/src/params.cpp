#include "traffic/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace traffic {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& constraint) {
  throw ValidationError("config field '" + field + "': " + constraint);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) { known = true; break; }
    if (!known)
      throw ValidationError("unknown config key '" + where + "." + it.key() + "'");
  }
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

// kappa entries may be the string "inf" or null for the uncontrolled case
double get_kappa_entry(const json& j, const std::string& field) {
  if (j.is_null()) return kInf;
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
    fail(field, "expected a number or \"inf\"");
  }
  return get_number(j, field);
}

std::array<double, 2> get_pair(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) fail(field, "expected an array of two numbers");
  return {get_number(j[0], field), get_number(j[1], field)};
}

SpeedProfile parse_speed_profile(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "value"});
  SpeedProfile sp;
  std::string kind = j.value("kind", "linear");
  if (kind == "linear") {
    sp.kind = SpeedProfile::Kind::Linear;
  } else if (kind == "constant") {
    sp.kind = SpeedProfile::Kind::Constant;
    if (!j.contains("value")) fail(where + ".value", "required for constant profile");
    sp.value = get_number(j["value"], where + ".value");
  } else {
    fail(where + ".kind", "expected \"linear\" or \"constant\"");
  }
  return sp;
}

DiffusionProfile parse_diffusion(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "value", "rho", "values"});
  DiffusionProfile d;
  std::string kind = j.value("kind", "constant");
  if (kind == "constant") {
    d.kind = DiffusionProfile::Kind::Constant;
    d.value = j.contains("value") ? get_number(j["value"], where + ".value") : 0.0;
  } else if (kind == "table") {
    d.kind = DiffusionProfile::Kind::Table;
    if (!j.contains("rho") || !j.contains("values"))
      fail(where, "table profile needs 'rho' and 'values'");
    d.rho_nodes = j["rho"].get<std::vector<double>>();
    d.values = j["values"].get<std::vector<double>>();
    if (d.rho_nodes.size() != d.values.size() || d.rho_nodes.size() < 2)
      fail(where, "table needs matching node/value arrays of length >= 2");
    if (!std::is_sorted(d.rho_nodes.begin(), d.rho_nodes.end()))
      fail(where + ".rho", "nodes must be ascending");
  } else {
    fail(where + ".kind", "expected \"constant\" or \"table\"");
  }
  return d;
}

std::vector<Box> parse_boxes(const json& j, const std::string& where) {
  std::vector<Box> out;
  if (!j.is_array()) fail(where, "expected an array of boxes");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& b = j[i];
    std::string w = where + "[" + std::to_string(i) + "]";
    check_keys(b, w, {"x", "v", "value"});
    Box box;
    auto x = get_pair(b.at("x"), w + ".x");
    auto v = get_pair(b.at("v"), w + ".v");
    box.x0 = x[0]; box.x1 = x[1];
    box.v0 = v[0]; box.v1 = v[1];
    box.value = get_number(b.at("value"), w + ".value");
    out.push_back(box);
  }
  return out;
}

json dump_speed_profile(const SpeedProfile& sp) {
  json j;
  if (sp.kind == SpeedProfile::Kind::Linear) {
    j["kind"] = "linear";
  } else {
    j["kind"] = "constant";
    j["value"] = sp.value;
  }
  return j;
}

json dump_kappa(double k) {
  if (std::isfinite(k)) return json(k);
  return json("inf");
}

}  // namespace

double DiffusionProfile::operator()(double rho) const {
  if (kind == Kind::Constant) return value;
  if (rho <= rho_nodes.front()) return values.front();
  if (rho >= rho_nodes.back()) return values.back();
  auto it = std::upper_bound(rho_nodes.begin(), rho_nodes.end(), rho);
  std::size_t i = static_cast<std::size_t>(it - rho_nodes.begin());
  double t = (rho - rho_nodes[i - 1]) / (rho_nodes[i] - rho_nodes[i - 1]);
  return values[i - 1] + t * (values[i] - values[i - 1]);
}

void ControlSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) fail("control.p", "must lie in [0,1]");
  for (int i = 0; i < 2; ++i) {
    if (!(kappa[i] > 0.0)) fail("control.kappa", "entries must be > 0 (or +inf)");
    // vbar(rho) must stay in [0,1]; checked on a 1001-point grid
    for (int g = 0; g <= 1000; ++g) {
      double v = recommended_speed[i](g / 1000.0);
      if (!(v >= 0.0 && v <= 1.0))
        fail("control.recommended_speed", "profile leaves [0,1] on the unit grid");
    }
  }
}

void NoiseSpec::validate() const {
  for (double l : lambda)
    if (!(l >= 0.0)) fail("noise.lambda", "entries must be >= 0");
  if (a.kind == DiffusionProfile::Kind::Constant) {
    if (!(a.value >= 0.0)) fail("noise.a.value", "must be >= 0");
  } else {
    for (double v : a.values)
      if (!(v >= 0.0)) fail("noise.a.values", "entries must be >= 0");
  }
}

void SwitchingSpec::validate() const {
  for (double b : beta)
    if (!(b >= 0.0)) fail("switching.beta", "entries must be >= 0");
  if (!(alpha > 0.0)) fail("switching.alpha", "must be > 0");
  for (double c : regime_rates)
    if (!(c >= 0.0)) fail("switching.regime_rates", "entries must be >= 0");
  if (velocity_coupling) {
    double a = velocity_coupling->a_offset;
    if (!(a > 0.0 && a < 1.0))
      fail("switching.velocity_coupling.a_offset", "must lie in (0,1)");
  }
}

void ModelParams::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("model.gamma", "must lie in (0,1]");
  if (!(mu > 0.0)) fail("model.mu", "must be > 0");
  control.validate();
  noise.validate();
  switching.validate();
}

InitialCondition InitialCondition::test1() {
  InitialCondition ic;
  ic.boxes[0] = {{-1.0, 0.0, 0.0, 0.5, 2.0}};
  ic.boxes[1] = {{-2.0, -1.0, 0.0, 0.5, 2.0}};
  return ic;
}

InitialCondition InitialCondition::test2() {
  InitialCondition ic;
  ic.boxes[0] = {{-1.0, 0.0, 0.0, 0.5, 2.0 * 0.8}, {0.0, 1.0, 0.0, 0.5, 2.0 * 0.2}};
  ic.boxes[1] = {{-2.0, -1.0, 0.5, 1.0, 2.0 * 0.8}, {-1.0, 0.0, 0.5, 1.0, 2.0 * 0.2}};
  return ic;
}

void InitialCondition::validate(double x_min, double x_max) const {
  for (const auto& lane : boxes) {
    for (const Box& b : lane) {
      if (!(b.value >= 0.0)) fail("initial_condition", "box density must be >= 0");
      if (!(b.x0 < b.x1) || !(b.v0 < b.v1))
        fail("initial_condition", "box intervals must be non-degenerate");
      if (b.x0 < x_min || b.x1 > x_max || b.v0 < 0.0 || b.v1 > 1.0)
        fail("initial_condition", "box must lie inside domain x [0,1]");
    }
  }
}

void DiscretizationSpec::validate() const {
  if (!(x_min < x_max)) fail("discretization.domain", "x_min < x_max required");
  if (nx < 1 || nv < 1) fail("discretization", "nx, nv must be >= 1");
  if (particles < 1) fail("discretization.particles", "must be >= 1");
  if (!(dt > 0.0)) fail("discretization.dt", "must be > 0");
  if (!(cfl > 0.0 && cfl < 1.0)) fail("discretization.cfl", "must lie in (0,1)");
  if (order != 1 && order != 2 && order != 5)
    fail("discretization.order", "must be 1, 2 or 5");
}

void ExperimentSpec::validate() const {
  if (!(final_time > 0.0)) fail("experiment.final_time", "must be > 0");
  discretization.validate();
  if (kind == ExperimentKind::Dsmc || kind == ExperimentKind::Compare) {
    if (!(epsilon > 0.0)) fail("experiment.epsilon", "must be > 0");
    initial_condition.validate(discretization.x_min, discretization.x_max);
  }
  if (kind == ExperimentKind::Compare) {
    if (epsilon_list.empty()) fail("experiment.epsilon_list", "must be non-empty");
    for (double e : epsilon_list)
      if (!(e > 0.0)) fail("experiment.epsilon_list", "entries must be > 0");
  }
  if (kind == ExperimentKind::Hydro)
    initial_condition.validate(discretization.x_min, discretization.x_max);
  for (double r : rho_grid)
    if (!(r >= 0.0 && r <= 1.0)) fail("experiment.rho_grid", "entries must lie in [0,1]");
}

std::pair<ModelParams, ExperimentSpec> load_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  check_keys(root, "", {"model", "experiment"});

  ModelParams params;
  if (root.contains("model")) {
    const json& m = root["model"];
    check_keys(m, "model", {"gamma", "mu", "control", "noise", "switching"});
    if (m.contains("gamma")) params.gamma = get_number(m["gamma"], "model.gamma");
    if (m.contains("mu")) params.mu = get_number(m["mu"], "model.mu");
    if (m.contains("control")) {
      const json& c = m["control"];
      check_keys(c, "model.control", {"p", "kappa", "recommended_speed"});
      if (c.contains("p")) params.control.p = get_number(c["p"], "model.control.p");
      if (c.contains("kappa")) {
        const json& k = c["kappa"];
        if (!k.is_array() || k.size() != 2)
          fail("model.control.kappa", "expected an array of two entries");
        params.control.kappa = {get_kappa_entry(k[0], "model.control.kappa"),
                                get_kappa_entry(k[1], "model.control.kappa")};
      }
      if (c.contains("recommended_speed")) {
        const json& r = c["recommended_speed"];
        if (r.is_array()) {
          if (r.size() != 2) fail("model.control.recommended_speed", "expected 2 profiles");
          params.control.recommended_speed = {
              parse_speed_profile(r[0], "model.control.recommended_speed[0]"),
              parse_speed_profile(r[1], "model.control.recommended_speed[1]")};
        } else {
          SpeedProfile sp = parse_speed_profile(r, "model.control.recommended_speed");
          params.control.recommended_speed = {sp, sp};
        }
      }
    }
    if (m.contains("noise")) {
      const json& n = m["noise"];
      check_keys(n, "model.noise", {"lambda", "a", "distribution"});
      if (n.contains("lambda")) params.noise.lambda = get_pair(n["lambda"], "model.noise.lambda");
      if (n.contains("a")) params.noise.a = parse_diffusion(n["a"], "model.noise.a");
      if (n.contains("distribution")) {
        if (n["distribution"].get<std::string>() != "uniform")
          fail("model.noise.distribution", "only \"uniform\" is supported");
      }
    }
    if (m.contains("switching")) {
      const json& s = m["switching"];
      check_keys(s, "model.switching",
                 {"beta", "alpha", "regime_rates", "velocity_coupling"});
      if (s.contains("beta")) params.switching.beta = get_pair(s["beta"], "model.switching.beta");
      if (s.contains("alpha"))
        params.switching.alpha = get_number(s["alpha"], "model.switching.alpha");
      if (s.contains("regime_rates"))
        params.switching.regime_rates = get_pair(s["regime_rates"], "model.switching.regime_rates");
      if (s.contains("velocity_coupling") && !s["velocity_coupling"].is_null()) {
        const json& v = s["velocity_coupling"];
        check_keys(v, "model.switching.velocity_coupling", {"a_offset"});
        VelocityCoupling vc;
        vc.a_offset = get_number(v.at("a_offset"), "model.switching.velocity_coupling.a_offset");
        params.switching.velocity_coupling = vc;
      }
    }
  }
  params.validate();

  ExperimentSpec exp;
  if (root.contains("experiment")) {
    const json& e = root["experiment"];
    check_keys(e, "experiment",
               {"kind", "discretization", "initial_condition", "epsilon", "epsilon_list",
                "hydro_regime", "final_time", "seed", "initial_moments", "time_scale",
                "include_asymptotes", "rho_grid", "kappa_list", "snapshots",
                "phase_histogram", "sum_flux", "kappa_zero_limit"});
    if (e.contains("kind")) {
      std::string k = e["kind"].get<std::string>();
      if (k == "homogeneous") exp.kind = ExperimentKind::Homogeneous;
      else if (k == "diagram") exp.kind = ExperimentKind::Diagram;
      else if (k == "dsmc") exp.kind = ExperimentKind::Dsmc;
      else if (k == "hydro") exp.kind = ExperimentKind::Hydro;
      else if (k == "compare") exp.kind = ExperimentKind::Compare;
      else fail("experiment.kind", "expected homogeneous|diagram|dsmc|hydro|compare");
    }
    if (e.contains("discretization")) {
      const json& d = e["discretization"];
      check_keys(d, "experiment.discretization",
                 {"domain", "nx", "nv", "dt", "particles", "cfl", "order"});
      if (d.contains("domain")) {
        auto dom = get_pair(d["domain"], "experiment.discretization.domain");
        exp.discretization.x_min = dom[0];
        exp.discretization.x_max = dom[1];
      }
      if (d.contains("nx")) exp.discretization.nx = d["nx"].get<int>();
      if (d.contains("nv")) exp.discretization.nv = d["nv"].get<int>();
      if (d.contains("dt")) exp.discretization.dt = get_number(d["dt"], "experiment.discretization.dt");
      if (d.contains("particles")) exp.discretization.particles = d["particles"].get<std::int64_t>();
      if (d.contains("cfl")) exp.discretization.cfl = get_number(d["cfl"], "experiment.discretization.cfl");
      if (d.contains("order")) exp.discretization.order = d["order"].get<int>();
    }
    if (e.contains("initial_condition")) {
      const json& ic = e["initial_condition"];
      if (ic.is_string()) {
        std::string name = ic.get<std::string>();
        if (name == "test1") exp.initial_condition = InitialCondition::test1();
        else if (name == "test2") exp.initial_condition = InitialCondition::test2();
        else fail("experiment.initial_condition", "unknown builtin '" + name + "'");
      } else {
        check_keys(ic, "experiment.initial_condition", {"lane1", "lane2"});
        if (ic.contains("lane1"))
          exp.initial_condition.boxes[0] = parse_boxes(ic["lane1"], "experiment.initial_condition.lane1");
        if (ic.contains("lane2"))
          exp.initial_condition.boxes[1] = parse_boxes(ic["lane2"], "experiment.initial_condition.lane2");
      }
    }
    if (e.contains("epsilon")) exp.epsilon = get_number(e["epsilon"], "experiment.epsilon");
    if (e.contains("epsilon_list"))
      exp.epsilon_list = e["epsilon_list"].get<std::vector<double>>();
    if (e.contains("hydro_regime")) {
      std::string r = e["hydro_regime"].get<std::string>();
      if (r == "collision") exp.hydro_regime = HydroRegime::Collision;
      else if (r == "fast") exp.hydro_regime = HydroRegime::Fast;
      else if (r == "slow") exp.hydro_regime = HydroRegime::Slow;
      else fail("experiment.hydro_regime", "expected collision|fast|slow");
    }
    if (e.contains("final_time")) exp.final_time = get_number(e["final_time"], "experiment.final_time");
    if (e.contains("seed")) exp.seed = e["seed"].get<std::uint64_t>();
    if (e.contains("initial_moments")) {
      const json& im = e["initial_moments"];
      check_keys(im, "experiment.initial_moments", {"rho", "m", "E"});
      if (im.contains("rho")) exp.rho0 = get_pair(im["rho"], "experiment.initial_moments.rho");
      if (im.contains("m")) exp.m0 = get_pair(im["m"], "experiment.initial_moments.m");
      if (im.contains("E")) exp.E0 = get_pair(im["E"], "experiment.initial_moments.E");
    }
    if (e.contains("time_scale")) {
      std::string t = e["time_scale"].get<std::string>();
      if (t == "scaled") exp.time_scale = TimeScale::Scaled;
      else if (t == "original") exp.time_scale = TimeScale::Original;
      else fail("experiment.time_scale", "expected scaled|original");
    }
    if (e.contains("include_asymptotes")) exp.include_asymptotes = e["include_asymptotes"].get<bool>();
    if (e.contains("rho_grid")) {
      const json& g = e["rho_grid"];
      if (g.is_array()) {
        exp.rho_grid = g.get<std::vector<double>>();
      } else {
        check_keys(g, "experiment.rho_grid", {"count"});
        int n = g.at("count").get<int>();
        if (n < 2) fail("experiment.rho_grid.count", "must be >= 2");
        for (int i = 0; i < n; ++i) exp.rho_grid.push_back(i / double(n - 1));
      }
    }
    if (e.contains("kappa_list")) {
      for (const json& k : e["kappa_list"])
        exp.kappa_list.push_back(get_kappa_entry(k, "experiment.kappa_list"));
    }
    if (e.contains("snapshots")) exp.snapshots = e["snapshots"].get<std::vector<double>>();
    if (e.contains("phase_histogram")) exp.phase_histogram = e["phase_histogram"].get<bool>();
    if (e.contains("sum_flux")) {
      std::string s = e["sum_flux"].get<std::string>();
      if (s == "rho_weighted") exp.sum_flux = SumFluxVariant::RhoWeighted;
      else if (s == "mean_sum") exp.sum_flux = SumFluxVariant::MeanSum;
      else fail("experiment.sum_flux", "expected rho_weighted|mean_sum");
    }
    if (e.contains("kappa_zero_limit")) exp.kappa_zero_limit = e["kappa_zero_limit"].get<bool>();
  }
  exp.validate();
  return {params, exp};
}

std::string serialize_config(const ModelParams& p, const ExperimentSpec& e) {
  json m;
  m["gamma"] = p.gamma;
  m["mu"] = p.mu;
  m["control"]["p"] = p.control.p;
  m["control"]["kappa"] = {dump_kappa(p.control.kappa[0]), dump_kappa(p.control.kappa[1])};
  m["control"]["recommended_speed"] = {dump_speed_profile(p.control.recommended_speed[0]),
                                       dump_speed_profile(p.control.recommended_speed[1])};
  m["noise"]["lambda"] = p.noise.lambda;
  if (p.noise.a.kind == DiffusionProfile::Kind::Constant) {
    m["noise"]["a"] = {{"kind", "constant"}, {"value", p.noise.a.value}};
  } else {
    m["noise"]["a"] = {{"kind", "table"}, {"rho", p.noise.a.rho_nodes}, {"values", p.noise.a.values}};
  }
  m["noise"]["distribution"] = "uniform";
  m["switching"]["beta"] = p.switching.beta;
  m["switching"]["alpha"] = p.switching.alpha;
  m["switching"]["regime_rates"] = p.switching.regime_rates;
  if (p.switching.velocity_coupling)
    m["switching"]["velocity_coupling"] = {{"a_offset", p.switching.velocity_coupling->a_offset}};

  json x;
  switch (e.kind) {
    case ExperimentKind::Homogeneous: x["kind"] = "homogeneous"; break;
    case ExperimentKind::Diagram: x["kind"] = "diagram"; break;
    case ExperimentKind::Dsmc: x["kind"] = "dsmc"; break;
    case ExperimentKind::Hydro: x["kind"] = "hydro"; break;
    case ExperimentKind::Compare: x["kind"] = "compare"; break;
  }
  x["discretization"] = {{"domain", {e.discretization.x_min, e.discretization.x_max}},
                         {"nx", e.discretization.nx},
                         {"nv", e.discretization.nv},
                         {"dt", e.discretization.dt},
                         {"particles", e.discretization.particles},
                         {"cfl", e.discretization.cfl},
                         {"order", e.discretization.order}};
  json ic;
  for (int lane = 0; lane < 2; ++lane) {
    json arr = json::array();
    for (const Box& b : e.initial_condition.boxes[lane])
      arr.push_back({{"x", {b.x0, b.x1}}, {"v", {b.v0, b.v1}}, {"value", b.value}});
    ic[lane == 0 ? "lane1" : "lane2"] = arr;
  }
  x["initial_condition"] = ic;
  x["epsilon"] = e.epsilon;
  if (!e.epsilon_list.empty()) x["epsilon_list"] = e.epsilon_list;
  switch (e.hydro_regime) {
    case HydroRegime::Collision: x["hydro_regime"] = "collision"; break;
    case HydroRegime::Fast: x["hydro_regime"] = "fast"; break;
    case HydroRegime::Slow: x["hydro_regime"] = "slow"; break;
  }
  x["final_time"] = e.final_time;
  x["seed"] = e.seed;
  x["initial_moments"] = {{"rho", e.rho0}, {"m", e.m0}, {"E", e.E0}};
  x["time_scale"] = e.time_scale == TimeScale::Scaled ? "scaled" : "original";
  x["include_asymptotes"] = e.include_asymptotes;
  if (!e.rho_grid.empty()) x["rho_grid"] = e.rho_grid;
  if (!e.kappa_list.empty()) {
    json kl = json::array();
    for (double k : e.kappa_list) kl.push_back(dump_kappa(k));
    x["kappa_list"] = kl;
  }
  if (!e.snapshots.empty()) x["snapshots"] = e.snapshots;
  x["phase_histogram"] = e.phase_histogram;
  x["sum_flux"] = e.sum_flux == SumFluxVariant::RhoWeighted ? "rho_weighted" : "mean_sum";
  x["kappa_zero_limit"] = e.kappa_zero_limit;

  json root;
  root["model"] = m;
  root["experiment"] = x;
  return root.dump(2);
}

AdmissibilityReport validate_admissibility(const ModelParams& params,
                                           std::array<double, 2> c) {
  AdmissibilityReport report;
  const double gamma = params.gamma;
  for (int lane = 0; lane < 2; ++lane) {
    LaneAdmissibility& la = report.lane[lane];
    double nu = params.nu(lane);
    double factor = std::isfinite(nu) ? (nu + gamma) / nu : 1.0;
    la.eta_bound = c[lane] * (1.0 - factor * gamma);
    double sigma2 = gamma * params.noise.lambda[lane];
    la.noise_half_width = std::sqrt(3.0 * sigma2);  // uniform law support
    la.noise_ok = la.noise_half_width <= la.eta_bound || sigma2 == 0.0;

    la.diffusion_ok = true;
    la.violations = 0;
    la.v_lo = 1.0;
    la.v_hi = 0.0;
    for (int iv = 0; iv <= 100; ++iv) {
      double v = iv / 100.0;
      for (int ir = 0; ir <= 100; ++ir) {
        double rho = ir / 100.0;
        double D = params.noise.a(rho) * std::sqrt(std::max(0.0, v * (1.0 - v)));
        if (c[lane] * D > std::min(v, 1.0 - v) + 1e-15) {
          la.diffusion_ok = false;
          ++la.violations;
          la.v_lo = std::min(la.v_lo, v);
          la.v_hi = std::max(la.v_hi, v);
        }
      }
    }
    if (la.diffusion_ok) { la.v_lo = 0.0; la.v_hi = 0.0; }
  }
  return report;
}

}  // namespace traffic
