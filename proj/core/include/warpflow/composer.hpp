#pragma once

// Ambient flow of a spherical curve in a rotationally symmetric space with
// density: the radial trajectory R(t) carries the sphere flow, which runs in
// the rescaled time ttilde(t).

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "warpflow/outcome.hpp"
#include "warpflow/radial.hpp"
#include "warpflow/space.hpp"
#include "warpflow/sphere_flow.hpp"

namespace warpflow {

/// Ambient point in product coordinates: radius and unit direction.
struct AmbientPoint {
  double r = 0.0;
  Vec3 direction = Vec3::UnitZ();
};

AmbientPoint compose_point(const Vec3& sphere_point, double R);

struct Budgets {
  double t_budget = 100.0;
  double ttilde_budget = 50.0;
  std::size_t max_steps = 5'000'000;  // sphere-flow steps
};

struct ComposerOptions {
  RadialOptions radial;
  SphereFlowOptions sphere;
  double snapshot_every = 0.01;   // ttilde units
  double time_match_tol = 1e-3;   // relative band around a finite ttilde limit
  ConformalMode conformal_mode = ConformalMode::DeclaredAsymptotics;
};

struct SphereSnapshot {
  double ttilde = 0.0;
  SphericalCurve curve;
  CurveDiagnostics diag;  // measured on S_{r0}
};

/// Composed sample: R(t) paired with the snapshot at ttilde(t). The metric
/// quantities are measured on S_{R(t)}.
struct ComposedSample {
  double t = 0.0;
  double ttilde = 0.0;
  double radius = 0.0;
  std::size_t snapshot = 0;
  double length = 0.0;
  double weighted_length = 0.0;
  double max_abs_k_psi = 0.0;
  double area_fraction = 0.0;
};

struct AmbientFlowRun {
  explicit AmbientFlowRun(RadialTrajectory traj) : radial(std::move(traj)) {}

  RadialTrajectory radial;
  std::vector<SphereSnapshot> snapshots;
  std::vector<ComposedSample> samples;

  SingularityVerdict sphere_verdict = NoSingularity{};
  double sphere_verdict_ttilde = 0.0;
  double sphere_ttilde_reached = 0.0;
  double ttilde_horizon = 0.0;
  std::string sphere_stop;          // "verdict", "horizon", "step budget" or the error text
  bool sphere_failed = false;       // stopped by a discretization or step error
  bool budget_exhausted = false;

  std::size_t sphere_steps = 0;
  double worst_weighted_length_increase = -1.0;
  std::size_t embed_checks = 0;
  std::size_t embed_failures = 0;

  bool phi_extends_c1 = true;
  std::string fingerprint;
};

/// Run the radial integration, then drive the sphere flow through the ttilde
/// range it demands, storing a snapshot every snapshot_every.
AmbientFlowRun simulate(const WarpedSpace& space, const DensitySpec& density,
                        const SphericalCurve& initial, double r0, const Budgets& budgets,
                        const ComposerOptions& opts = {});

struct FlowOutcome {
  OutcomeTag tag = OutcomeTag::Undetermined;
  double t_end = 0.0;
  double radius = 0.0;
  std::optional<AmbientPoint> location;
  std::optional<BlowupLimit> blowup_limit;
  std::optional<double> r_infinity;
  std::optional<SphericalCurve> limit_curve;
  std::string reason;
  std::vector<std::string> evidence;
};

FlowOutcome classify_outcome(const AmbientFlowRun& run, const WarpedSpace& space,
                             const DensitySpec& density, const ComposerOptions& opts = {});

struct BlowupTrajectory {
  std::vector<SphereSnapshot> snapshots;
  std::optional<BlowupLimit> limit;  // nullopt when the run does not settle it
};

/// Blow-up at the pole. The rescaled flow is the sphere flow itself.
BlowupTrajectory blowup_rescale(const AmbientFlowRun& run);

}  // namespace warpflow
