#pragma once

// Run configuration: a strict JSON schema mapped onto the core types.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "warpflow/composer.hpp"
#include "warpflow/space.hpp"
#include "warpflow/sphere_flow.hpp"

namespace warpflow::cli {

struct SpaceConfig {
  std::string preset = "euclidean";  // euclidean | hyperbolic | power | table
  double p = 0.5;                     // power
  double glue = 1.0;                  // power
  std::string path;                   // table: two columns "r w"
  std::optional<std::string> tail_shape;  // table: power | exponential
  double tail_exponent = 1.0;
};

struct PhiConfig {
  std::string preset = "none";  // none | gaussian | log_power
  double mu = 1.0;
  double a = 0.0, b = 0.0, c = 0.0;
};

struct PsiConfig {
  std::string preset = "zero";  // zero | z_squared | table
  double a = 1.0;
  std::string path;  // table: "n_theta n_lambda" then row-major values
};

struct InitialConfig {
  std::string preset = "latitude";  // latitude | fourier
  double theta0 = 1.5707963267948966;
  std::vector<double> a;  // fourier cos coefficients, k = 1, 2, ...
  std::vector<double> b;  // fourier sin coefficients
};

struct SolverConfig {
  std::size_t N = 256;
  double cfl = 0.25;
  int reparam_every = 25;
  int embed_check_every = 100;
  double snapshot_every = 0.01;
  double t_budget = 100.0;
  double ttilde_budget = 50.0;
  std::size_t max_steps = 5'000'000;
  double rtol = 1e-10;
  double atol = 1e-14;
  double pole_eps_rel = 1e-8;
  double root_eps_rel = 1e-6;
  double r_max_rel = 1e6;
  double max_step = 1e-2;
  int root_window = 10;
  std::size_t window = 50;
  double len_eps_rel = 1e-3;
  double kpsi_eps_rel = 1e-5;
  double round_tol = 0.05;
  double blowup_ratio = 1e3;
  double time_match_tol = 1e-3;
};

struct RunConfig {
  SpaceConfig space;
  PhiConfig phi;
  PsiConfig psi;
  InitialConfig initial;
  double r0 = 1.0;
  SolverConfig solver;
  std::filesystem::path output = "warpflow_out";
  std::filesystem::path base_dir = ".";  // directory of the config file, for table paths
};

/// Parse and validate. Throws ConfigError naming the offending field, or
/// ConfigError with line and column for malformed JSON.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Fully populated JSON form of a config, defaults included.
nlohmann::json to_json(const RunConfig& cfg);

WarpedSpace build_space(const RunConfig& cfg);
DensitySpec build_density(const RunConfig& cfg);
SphericalCurve build_initial(const RunConfig& cfg, const WarpedSpace& space);
Budgets build_budgets(const RunConfig& cfg);
ComposerOptions build_options(const RunConfig& cfg);

/// Output directory, honoring WARPFLOW_OUT.
std::filesystem::path output_dir(const RunConfig& cfg);

}  // namespace warpflow::cli
