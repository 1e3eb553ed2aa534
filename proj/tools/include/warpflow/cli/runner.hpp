#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "warpflow/cli/config.hpp"
#include "warpflow/outcome.hpp"

namespace warpflow::cli {

enum ExitCode : int { kClassified = 0, kFailed = 1, kUndetermined = 2 };

struct RunResult {
  std::optional<OutcomeTag> tag;  // nullopt when the run failed
  std::string error;
  double area_fraction0 = 0.0;
  int exit_code = kFailed;
};

/// Simulate, classify and write timeseries.csv, snapshots/ and report.json into out_dir.
RunResult execute_run(const RunConfig& cfg, const std::filesystem::path& out_dir);

int run_single(const RunConfig& cfg);

struct GridSpec {
  std::vector<double> r0;
  std::vector<double> theta0;
  unsigned parallelism = 1;
};

/// Runs every (r0, theta0) cell into cell_<index>/ and writes phase.csv.
int run_phase_grid(const RunConfig& base, const GridSpec& grid);

/// Closed-form prediction when the config is Euclidean with Gaussian phi and psi = 0.
std::optional<OutcomeTag> oracle_tag(const RunConfig& cfg, double area_fraction0);
std::optional<nlohmann::json> oracle_report(const RunConfig& cfg);

/// Area fraction of the initial curve, snapped to exactly 1/2 within 1e-9.
double initial_area_fraction(const RunConfig& cfg);

}  // namespace warpflow::cli
