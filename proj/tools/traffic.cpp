#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "traffic/io.hpp"
#include "traffic/runner.hpp"

using nlohmann::json;

namespace {

// KEY=VAL with dotted KEY paths into the config document; VAL parsed as JSON
// when possible, kept as a string otherwise.
void apply_override(json& doc, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw traffic::ValidationError("override must look like KEY=VAL: " + spec);
  std::string key = spec.substr(0, eq);
  std::string val = spec.substr(eq + 1);
  std::string pointer = "/";
  for (char c : key) pointer += (c == '.') ? '/' : c;
  json parsed;
  try {
    parsed = json::parse(val);
  } catch (const json::exception&) {
    parsed = val;
  }
  doc[json::json_pointer(pointer)] = parsed;
}

int read_threads_env() {
  const char* env = std::getenv("TRAFFIC_THREADS");
  if (!env || !*env) return 0;
  return std::max(0, std::atoi(env));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilane kinetic traffic toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  bool seed_given = false;
  std::uint64_t seed = 0;

  const char* names[] = {"homogeneous", "diagram", "dsmc", "hydro", "compare"};
  const traffic::ExperimentKind kinds[] = {
      traffic::ExperimentKind::Homogeneous, traffic::ExperimentKind::Diagram,
      traffic::ExperimentKind::Dsmc, traffic::ExperimentKind::Hydro,
      traffic::ExperimentKind::Compare};
  for (const char* name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path)->required();
    sub->add_option("--out", out_dir)->required();
    sub->add_option("--seed", seed)->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--override", overrides);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    json doc = json::parse(traffic::read_text(config_path));
    for (const std::string& o : overrides) apply_override(doc, o);

    auto [params, exp] = traffic::load_config(doc.dump());
    for (int k = 0; k < 5; ++k)
      if (app.get_subcommands().front()->get_name() == names[k]) exp.kind = kinds[k];
    if (seed_given) exp.seed = seed;

    traffic::RunResult res =
        traffic::run_experiment(params, exp, out_dir, read_threads_env());
    for (const std::string& f : res.files) std::cout << "wrote " << f << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
