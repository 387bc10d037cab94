#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "traffic/io.hpp"
#include "traffic/params.hpp"
#include "traffic/rng.hpp"
#include "traffic/runner.hpp"

using namespace traffic;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("traffic_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("number formatting round-trips exactly") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-1.25) == "-1.25");
  CounterRng rng(CounterRng::derive(606));
  for (int i = 0; i < 2000; ++i) {
    double x = (rng.next_double() - 0.5) * std::pow(10.0, rng.uniform(-12, 12));
    CHECK(std::stod(format_number(x)) == x);
  }
}

TEST_CASE("content hash matches reference FNV-1a values") {
  CHECK(content_hash("") == "cbf29ce484222325");
  CHECK(content_hash("a") == "af63dc4c8601ec8c");
  CHECK(content_hash("hello") != content_hash("hellp"));
}

TEST_CASE("csv writing produces the documented layout") {
  fs::path dir = fresh_dir("csv");
  CsvTable t;
  t.header = {"x", "rho"};
  t.rows = {{0.5, 1.0}, {1.5, 0.25}};
  std::string path = (dir / "t.csv").string();
  write_csv(path, t);
  CHECK(read_text(path) == "x,rho\n0.5,1\n1.5,0.25\n");
  fs::remove_all(dir);
}

TEST_CASE("l1 error and cell aggregation behave on pinned inputs") {
  std::vector<double> a = {0.2, 0.4, 0.6};
  CHECK(l1_density_error(a, a, 0.1) == 0.0);
  std::vector<double> b = {0.3, 0.2, 0.6};
  CHECK(l1_density_error(a, b, 0.1) == doctest::Approx(0.03).epsilon(1e-14));
  std::vector<double> fine = {1.0, 2.0, 3.0, 4.0};
  auto coarse = aggregate_cells(fine, 2);
  REQUIRE(coarse.size() == 2);
  CHECK(coarse[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(coarse[1] == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("experiment runs write a manifest and are byte-stable") {
  std::string cfg = R"({
    "model": {
      "gamma": 0.001, "mu": 2,
      "switching": {"beta": [0.1, 0.2], "alpha": 1}
    },
    "experiment": {
      "kind": "homogeneous", "final_time": 5,
      "initial_moments": {"rho": [0.2, 0.8], "m": [0.5, 0.5], "E": [0.3, 0.3]},
      "discretization": {"dt": 0.01}
    }
  })";
  auto [params, exp] = load_config(cfg);
  fs::path d1 = fresh_dir("run1"), d2 = fresh_dir("run2");
  auto r1 = run_experiment(params, exp, d1.string(), 0);
  auto r2 = run_experiment(params, exp, d2.string(), 0);
  REQUIRE(!r1.files.empty());
  for (const auto& f : r1.files) {
    CHECK(fs::exists(d1 / f));
    CHECK(read_text((d1 / f).string()) == read_text((d2 / f).string()));
  }
  CHECK(fs::exists(d1 / "manifest.json"));
  std::string manifest = read_text((d1 / "manifest.json").string());
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find("trajectory.csv") != std::string::npos);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("a single-entry epsilon list yields a single comparison row") {
  std::string cfg = R"({
    "model": {
      "gamma": 0.015, "mu": 2,
      "noise": {"lambda": [1, 1], "a": {"kind": "constant", "value": 1}},
      "switching": {"alpha": 2, "regime_rates": [2, 2]}
    },
    "experiment": {
      "kind": "compare", "initial_condition": "test1",
      "epsilon": 0.01, "epsilon_list": [0.01],
      "final_time": 0.1, "seed": 5,
      "discretization": {"domain": [-2, 2], "nx": 20, "dt": 0.1,
                          "particles": 20000, "order": 2, "cfl": 0.45}
    }
  })";
  auto [params, exp] = load_config(cfg);
  fs::path dir = fresh_dir("cmp");
  auto res = cmd_compare(params, exp, dir.string(), 0);
  REQUIRE(res.files == std::vector<std::string>{"compare.csv"});
  std::string text = read_text((dir / "compare.csv").string());
  CHECK(text.rfind("epsilon,l1_lane1,l1_lane2\n", 0) == 0);
  // header plus exactly one data row
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  fs::remove_all(dir);
}
