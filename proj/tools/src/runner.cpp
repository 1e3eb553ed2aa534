#include "warpflow/cli/runner.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "warpflow/composer.hpp"
#include "warpflow/errors.hpp"
#include "warpflow/gaussian_oracle.hpp"

namespace warpflow::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxSnapshotFiles = 100;

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_timeseries(const fs::path& path, const AmbientFlowRun& run) {
  auto out = open_out(path);
  out << "t,ttilde,R,length,weighted_length,max_abs_k_psi,area_fraction\n";
  for (const auto& s : run.samples) {
    out << s.t << ',' << s.ttilde << ',' << s.radius << ',' << s.length << ','
        << s.weighted_length << ',' << s.max_abs_k_psi << ',' << s.area_fraction << '\n';
  }
}

void write_snapshots(const fs::path& dir, const AmbientFlowRun& run) {
  fs::create_directories(dir);
  auto index = open_out(dir / "index.csv");
  index << "index,ttilde,file\n";
  const std::size_t n = run.snapshots.size();
  const std::size_t stride = (n + kMaxSnapshotFiles - 1) / kMaxSnapshotFiles;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % stride != 0 && i + 1 != n) continue;
    std::ostringstream name;
    name << "snap_" << std::setw(6) << std::setfill('0') << i << ".txt";
    auto out = open_out(dir / name.str());
    write_snapshot(out, run.snapshots[i].curve);
    index << i << ',' << run.snapshots[i].ttilde << ',' << name.str() << '\n';
  }
}

json event_json(const RadialEvent& event) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PoleHit>) {
          return {{"kind", "PoleHit"}, {"t_hit", e.t_hit}};
        } else if constexpr (std::is_same_v<T, RootConvergence>) {
          return {{"kind", "RootConvergence"}, {"r_star", e.r_star}};
        } else if constexpr (std::is_same_v<T, Escape>) {
          return {{"kind", "Escape"}, {"r_reached", e.r_reached}};
        } else {
          return {{"kind", "Budget"}, {"t_end", e.t_end}};
        }
      },
      event);
}

void write_report(const fs::path& path, const json& report) {
  auto out = open_out(path);
  out << report.dump(2) << '\n';
}

}  // namespace

double initial_area_fraction(const RunConfig& cfg) {
  const WarpedSpace space = build_space(cfg);
  const DensitySpec density = build_density(cfg);
  const double f = diagnose(build_initial(cfg, space), density).area_fraction;
  return std::abs(f - 0.5) <= 1e-9 ? 0.5 : f;
}

RunResult execute_run(const RunConfig& cfg, const fs::path& out_dir) {
  RunResult result;
  json report{{"config", to_json(cfg)}};
  fs::create_directories(out_dir);
  try {
    const WarpedSpace space = build_space(cfg);
    const DensitySpec density = build_density(cfg);
    const SphericalCurve initial = build_initial(cfg, space);
    result.area_fraction0 = initial_area_fraction(cfg);
    const ComposerOptions opts = build_options(cfg);

    const AmbientFlowRun run = simulate(space, density, initial, cfg.r0, build_budgets(cfg), opts);
    const FlowOutcome outcome = classify_outcome(run, space, density, opts);

    write_timeseries(out_dir / "timeseries.csv", run);
    write_snapshots(out_dir / "snapshots", run);

    report["terminal_events"] = {
        {"radial", event_json(run.radial.terminal_event())},
        {"sphere", {{"verdict", verdict_name(run.sphere_verdict)},
                    {"ttilde", run.sphere_verdict_ttilde},
                    {"stop", run.sphere_stop},
                    {"steps", run.sphere_steps}}}};
    report["outcome_tag"] = to_string(outcome.tag);
    json evidence{{"t_end", number(outcome.t_end)},
                  {"ttilde_end", run.sphere_ttilde_reached},
                  {"R_end", number(outcome.radius)},
                  {"length_end", run.samples.empty() ? json(nullptr)
                                                     : number(run.samples.back().length)},
                  {"area_fraction_series_path", "timeseries.csv"},
                  {"area_fraction0", result.area_fraction0},
                  {"trail", outcome.evidence}};
    const auto& lim = run.radial.ttilde_limit();
    evidence["ttilde_limit"] = lim.finite() ? json(lim.value) : json(lim.infinite() ? "inf" : "unknown");
    if (outcome.blowup_limit) evidence["blowup_limit"] = to_string(*outcome.blowup_limit);
    if (outcome.r_infinity) evidence["R_infinity"] = *outcome.r_infinity;
    if (outcome.location) {
      const Vec3& p = outcome.location->direction;
      evidence["location"] = {{"r", number(outcome.location->r)}, {"direction", {p.x(), p.y(), p.z()}}};
    }
    evidence["worst_weighted_length_increase"] = run.worst_weighted_length_increase;
    evidence["embed_checks"] = run.embed_checks;
    evidence["embed_failures"] = run.embed_failures;
    report["evidence"] = evidence;
    if (outcome.tag == OutcomeTag::Undetermined) report["reason"] = outcome.reason;

    result.tag = outcome.tag;
    result.exit_code = outcome.tag == OutcomeTag::Undetermined ? kUndetermined : kClassified;
  } catch (const std::exception& e) {
    result.error = e.what();
    result.exit_code = kFailed;
    report["outcome_tag"] = nullptr;
    report["error"] = e.what();
  }
  write_report(out_dir / "report.json", report);
  return result;
}

int run_single(const RunConfig& cfg) {
  const fs::path dir = output_dir(cfg);
  const RunResult r = execute_run(cfg, dir);
  if (r.tag) {
    std::cout << to_string(*r.tag) << '\n';
  } else {
    std::cerr << "error: " << r.error << '\n';
  }
  return r.exit_code;
}

std::optional<OutcomeTag> oracle_tag(const RunConfig& cfg, double area_fraction0) {
  if (cfg.space.preset != "euclidean" || cfg.phi.preset != "gaussian" || cfg.psi.preset != "zero") {
    return std::nullopt;
  }
  return gaussian::classify_gaussian_case({cfg.phi.mu, cfg.r0, area_fraction0});
}

std::optional<json> oracle_report(const RunConfig& cfg) {
  const double f = initial_area_fraction(cfg);
  const auto tag = oracle_tag(cfg, f);
  if (!tag) return std::nullopt;
  const gaussian::GaussianConfig g{cfg.phi.mu, cfg.r0, f};
  auto optional_number = [](std::optional<double> v) { return v ? json(*v) : json("inf"); };
  json out{{"mu", g.mu},
           {"r0", g.r0},
           {"area_fraction0", f},
           {"threshold_fraction", gaussian::threshold_fraction(g)},
           {"ttilde_limit", optional_number(gaussian::ttilde_limit(g))},
           {"ttilde_max", optional_number(gaussian::ttilde_max_exact(g))},
           {"outcome_tag", to_string(*tag)}};
  if (auto tp = gaussian::pole_time(g)) out["pole_time"] = *tp;
  return out;
}

int run_phase_grid(const RunConfig& base, const GridSpec& grid) {
  if (grid.r0.empty() || grid.theta0.empty()) throw UsageError("phase grid needs r0 and theta0 values");
  const fs::path root = output_dir(base);
  fs::create_directories(root);

  struct Cell {
    RunConfig cfg;
    RunResult result;
    std::optional<OutcomeTag> oracle;
  };
  std::vector<Cell> cells;
  for (double r0 : grid.r0) {
    for (double theta0 : grid.theta0) {
      RunConfig cfg = base;
      cfg.r0 = r0;
      cfg.initial.theta0 = theta0;
      cells.push_back({cfg, {}, std::nullopt});
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& cell = cells[i];
      cell.result = execute_run(cell.cfg, root / ("cell_" + std::to_string(i)));
      if (cell.result.tag) cell.oracle = oracle_tag(cell.cfg, cell.result.area_fraction0);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(grid.parallelism, unsigned(cells.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  }

  auto out = open_out(root / "phase.csv");
  out << "index,r0,theta0,area_fraction0,outcome_tag,oracle_tag,agree\n";
  int status = kClassified;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    const std::string tag = c.result.tag ? to_string(*c.result.tag) : "Error";
    const std::string oracle = c.oracle ? to_string(*c.oracle) : "";
    const std::string agree = c.oracle ? (c.oracle == c.result.tag ? "true" : "false") : "";
    out << i << ',' << c.cfg.r0 << ',' << c.cfg.initial.theta0 << ',' << c.result.area_fraction0
        << ',' << tag << ',' << oracle << ',' << agree << '\n';
    if (c.result.exit_code == kFailed) {
      status = kFailed;
    } else if (c.result.exit_code == kUndetermined && status != kFailed) {
      status = kUndetermined;
    }
  }
  std::cout << "wrote " << (root / "phase.csv").string() << " (" << cells.size() << " cells)\n";
  return status;
}

}  // namespace warpflow::cli
