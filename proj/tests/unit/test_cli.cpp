#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "warpflow/cli/config.hpp"
#include "warpflow/cli/runner.hpp"
#include "warpflow/errors.hpp"

using namespace warpflow;
using namespace warpflow::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "space": {"preset": "euclidean"},
  "density": {"phi": {"preset": "gaussian", "mu": 1}},
  "initial": {"preset": "latitude", "theta0": 1.0471975511965976},
  "r0": 2
})";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("warpflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string expect_config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  FAIL("expected a configuration error");
  return {};
}

RunConfig quick(const std::string& extra_solver = "") {
  return parse_config(std::string(R"({
    "space": {"preset": "euclidean"},
    "density": {"phi": {"preset": "gaussian", "mu": 1}},
    "initial": {"preset": "latitude", "theta0": 0.35},
    "r0": 2,
    "solver": {"N": 64)") + extra_solver + "}}");
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.r0 == 2.0);
  CHECK(cfg.phi.preset == "gaussian");
  CHECK(cfg.psi.preset == "zero");
  CHECK(cfg.solver.N == 256);
  CHECK(cfg.solver.cfl == 0.25);
  CHECK(cfg.solver.snapshot_every == 0.01);
  CHECK(cfg.solver.time_match_tol == 1e-3);
  CHECK(cfg.solver.pole_eps_rel == 1e-8);
  const auto j = to_json(cfg);
  CHECK(j["solver"]["N"] == 256);
  CHECK(parse_config(j.dump()).solver.reparam_every == cfg.solver.reparam_every);
}

TEST_CASE("validation errors name the field") {
  CHECK(expect_config_error(R"({"r0": 1, "solver": {"N": 8}})").find("N ≥ 16") != std::string::npos);
  CHECK(expect_config_error(R"({"r0": 1, "colour": "red"})").find("colour") != std::string::npos);
  CHECK(expect_config_error(R"({"r0": 1, "solver": {"colour": 1}})").find("solver.colour") !=
        std::string::npos);
  CHECK(expect_config_error(R"({"r0": -1})").find("r0") != std::string::npos);
  CHECK(expect_config_error(R"({"solver": {}})").find("r0") != std::string::npos);
  CHECK(expect_config_error(R"({"r0": 1, "solver": {"rtol": 0}})").find("solver.rtol") !=
        std::string::npos);
  CHECK(expect_config_error(R"({"r0": 1, "density": {"phi": {"preset": "magic"}}})")
            .find("density.phi.preset") != std::string::npos);
  CHECK(expect_config_error(R"({"r0": 1, "density": {"phi": {"preset": "none", "mu": 2}}})")
            .find("density.phi.mu") != std::string::npos);
  CHECK(expect_config_error(R"({"r0": 1, "solver": {"N": "many"}})").find("integer") !=
        std::string::npos);
}

TEST_CASE("parse errors carry line and column") {
  const std::string msg = expect_config_error("{\"r0\": 1,\n  \"solver\": {N: 3}}");
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("column 14") != std::string::npos);
}

TEST_CASE("builders") {
  const auto cfg = parse_config(R"({
    "space": {"preset": "power", "p": 0.5, "glue": 1},
    "density": {"phi": {"preset": "log_power", "a": -0.5, "b": -1, "c": 0},
                "psi": {"preset": "z_squared", "a": 0.3}},
    "initial": {"preset": "fourier", "theta0": 1.0, "a": [0.05, 0.02], "b": [0.01]},
    "r0": 2, "solver": {"N": 32}})");
  const auto space = build_space(cfg);
  CHECK(space.w(4.0) == doctest::Approx(2.0));
  const auto density = build_density(cfg);
  CHECK(density.phi_prime(2.0) == doctest::Approx(-0.25 - 2.0));
  CHECK(density.psi(Vec3::UnitZ()) == doctest::Approx(0.3));
  CHECK(build_initial(cfg, space).size() == 32);
}

TEST_CASE("tables resolve relative to the config file") {
  const auto dir = scratch("tables");
  {
    std::ofstream w(dir / "w.txt");
    for (int i = 1; i <= 60; ++i) w << 0.05 * i << ' ' << std::sinh(0.05 * i) << '\n';
    std::ofstream psi(dir / "psi.txt");
    psi << "5 8\n";
    for (int i = 0; i < 40; ++i) psi << 0.1 << ' ';
    std::ofstream c(dir / "cfg.json");
    c << R"({"space": {"preset": "table", "path": "w.txt", "tail_shape": "exponential"},
             "density": {"psi": {"preset": "table", "path": "psi.txt"}}, "r0": 1})";
  }
  const auto cfg = load_config(dir / "cfg.json");
  CHECK(build_space(cfg).w(1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-4));
  CHECK(build_density(cfg).psi(Vec3::UnitX()) == doctest::Approx(0.1));
}

TEST_CASE("run_single writes the documented files") {
  const auto dir = scratch("single");
  auto cfg = quick();
  cfg.output = dir / "out";
  const auto r = execute_run(cfg, cfg.output);
  CHECK(r.exit_code == kClassified);
  REQUIRE(r.tag.has_value());
  CHECK(*r.tag == OutcomeTag::CollapseSphericalRoundPoint);
  const std::string series = slurp(dir / "out" / "timeseries.csv");
  CHECK(series.rfind("t,ttilde,R,length,weighted_length,max_abs_k_psi,area_fraction\n", 0) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report["outcome_tag"] == "CollapseSphericalRoundPoint");
  for (const char* key : {"t_end", "ttilde_end", "R_end", "length_end", "area_fraction_series_path"}) {
    CHECK(report["evidence"].contains(key));
  }
  CHECK(report["terminal_events"]["radial"]["kind"] == "Escape");
  CHECK(report["config"]["r0"] == 2.0);
  CHECK(fs::exists(dir / "out" / "snapshots" / "index.csv"));
  CHECK(fs::exists(dir / "out" / "snapshots" / "snap_000000.txt"));
}

TEST_CASE("runs are deterministic") {
  const auto dir = scratch("determinism");
  auto cfg = quick();
  execute_run(cfg, dir / "a");
  execute_run(cfg, dir / "b");
  CHECK(slurp(dir / "a" / "timeseries.csv") == slurp(dir / "b" / "timeseries.csv"));
}

TEST_CASE("budget of one step is undetermined") {
  const auto dir = scratch("budget");
  const auto r = execute_run(quick(R"(, "max_steps": 1)"), dir);
  CHECK(r.exit_code == kUndetermined);
  CHECK(*r.tag == OutcomeTag::Undetermined);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report.contains("reason"));
}

TEST_CASE("component errors land in the report") {
  const auto dir = scratch("failure");
  auto cfg = quick();
  cfg.initial.preset = "fourier";
  cfg.initial.a = {0.0, 2.0};
  const auto r = execute_run(cfg, dir);
  CHECK(r.exit_code == kFailed);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report.contains("error"));
}

TEST_CASE("WARPFLOW_OUT overrides the output directory") {
  auto cfg = quick();
  cfg.output = "somewhere";
  ::setenv("WARPFLOW_OUT", "/tmp/elsewhere", 1);
  CHECK(output_dir(cfg) == fs::path("/tmp/elsewhere"));
  ::unsetenv("WARPFLOW_OUT");
  CHECK(output_dir(cfg) == fs::path("somewhere"));
}

TEST_CASE("oracle predictions") {
  auto cfg = parse_config(kMinimal);
  const auto report = oracle_report(cfg);
  REQUIRE(report.has_value());
  CHECK((*report)["outcome_tag"] == "EscapeHyperbolicCurveAtInfinity");
  CHECK((*report)["threshold_fraction"].get<double>() == doctest::Approx(0.066987298107780677));
  cfg.initial.theta0 = 1.5707963267948966;
  cfg.r0 = 1.0;
  CHECK(oracle_tag(cfg, initial_area_fraction(cfg)) == OutcomeTag::ConvergePsiMinimal);
  cfg.psi.preset = "z_squared";
  CHECK_FALSE(oracle_report(cfg).has_value());
}

TEST_CASE("phase grid cells do not depend on grid order") {
  const auto dir = scratch("grid");
  auto base = quick();
  base.solver.N = 48;
  auto read_cells = [](const fs::path& csv) {
    std::map<std::pair<std::string, std::string>, std::string> cells;
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string index, r0, theta0, rest;
      std::getline(ss, index, ',');
      std::getline(ss, r0, ',');
      std::getline(ss, theta0, ',');
      std::getline(ss, rest);
      cells[{r0, theta0}] = rest;
    }
    return cells;
  };
  ::setenv("WARPFLOW_OUT", (dir / "forward").c_str(), 1);
  CHECK(run_phase_grid(base, {{1.0, 2.0}, {0.35, 1.5707963267948966}, 2}) == kClassified);
  ::setenv("WARPFLOW_OUT", (dir / "reverse").c_str(), 1);
  CHECK(run_phase_grid(base, {{2.0, 1.0}, {1.5707963267948966, 0.35}, 1}) == kClassified);
  ::unsetenv("WARPFLOW_OUT");
  const auto fwd = read_cells(dir / "forward" / "phase.csv");
  const auto rev = read_cells(dir / "reverse" / "phase.csv");
  CHECK(fwd.size() == 4);
  CHECK(fwd == rev);
  for (const auto& [key, rest] : fwd) CHECK(rest.substr(rest.size() - 4) == "true");
  CHECK(fs::exists(dir / "forward" / "cell_3" / "report.json"));
}

TEST_CASE("1x1 grid matches run_single") {
  const auto dir = scratch("grid1");
  auto base = quick();
  ::setenv("WARPFLOW_OUT", (dir / "grid").c_str(), 1);
  run_phase_grid(base, {{2.0}, {0.35}, 1});
  ::unsetenv("WARPFLOW_OUT");
  execute_run(base, dir / "single");
  CHECK(slurp(dir / "grid" / "cell_0" / "timeseries.csv") == slurp(dir / "single" / "timeseries.csv"));
}
