#include <iostream>

#include <CLI11.hpp>

#include "warpflow/cli/config.hpp"
#include "warpflow/cli/runner.hpp"
#include "warpflow/errors.hpp"

int main(int argc, char** argv) {
  using namespace warpflow::cli;

  CLI::App app{"Flow of spherical curves in rotationally symmetric spaces with density"};
  app.require_subcommand(1);

  std::string run_path;
  auto* run = app.add_subcommand("run", "simulate one configuration");
  run->add_option("config", run_path, "JSON config file")->required();

  std::string grid_path;
  GridSpec grid;
  auto* grid_cmd = app.add_subcommand("grid", "sweep r0 and theta0 into a phase matrix");
  grid_cmd->add_option("config", grid_path, "base JSON config file")->required();
  grid_cmd->add_option("--r0", grid.r0, "comma separated initial radii")->delimiter(',')->required();
  grid_cmd->add_option("--theta0", grid.theta0, "comma separated polar angles")
      ->delimiter(',')
      ->required();
  grid_cmd->add_option("-j,--jobs", grid.parallelism, "concurrent runs")->default_val(1);

  std::string oracle_path;
  auto* oracle = app.add_subcommand("oracle", "print the closed-form Gaussian prediction");
  oracle->add_option("config", oracle_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kFailed;
  }

  try {
    if (*run) return run_single(load_config(run_path));
    if (*grid_cmd) return run_phase_grid(load_config(grid_path), grid);
    const auto report = oracle_report(load_config(oracle_path));
    if (!report) {
      std::cerr << "error: the closed form covers euclidean space with gaussian phi and zero psi only\n";
      return kFailed;
    }
    std::cout << report->dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
}
