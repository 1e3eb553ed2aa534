#pragma once

// Discrete curve shortening flow with density psi on the fixed geodesic
// sphere S_{r0}. Curves are stored on the unit sphere; every metric quantity
// is rescaled by the sphere radius rho = w(r0).

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "warpflow/space.hpp"

namespace warpflow {

/// Closed polygon of unit vectors with the sphere radius it lives on.
/// omega_on_left selects which side of the curve is the tracked region
/// Omega: the one to the left of the traversal direction (seen from outside)
/// or the one to the right.
class SphericalCurve {
 public:
  static constexpr std::size_t kMinNodes = 16;

  SphericalCurve(std::vector<Vec3> nodes, double rho, std::optional<bool> omega_on_left = std::nullopt);

  const std::vector<Vec3>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double rho() const { return rho_; }
  bool omega_on_left() const { return omega_on_left_; }
  /// +1 when Omega lies to the left of the traversal, -1 otherwise.
  double orientation() const { return omega_on_left_ ? 1.0 : -1.0; }

  SphericalCurve with_nodes(std::vector<Vec3> nodes) const;
  SphericalCurve with_rho(double rho) const;

 private:
  std::vector<Vec3> nodes_;
  double rho_;
  bool omega_on_left_;
};

struct CurveDiagnostics {
  double rho = 1.0;
  double length = 0.0;
  double weighted_length = 0.0;
  double max_abs_k = 0.0;
  double max_abs_k_psi = 0.0;
  double enclosed_area = 0.0;
  double area_fraction = 0.0;
  double isoperimetric_ratio = 0.0;
  Vec3 centroid = Vec3::Zero();  // gap-weighted mean direction, normalized
};

SphericalCurve make_latitude_circle(double theta0, std::size_t n, double rho);

struct FourierPerturbation {
  double theta0 = 0.0;
  std::vector<double> cos_coeffs;  // a_k for k = 1, 2, ...
  std::vector<double> sin_coeffs;  // b_k for k = 1, 2, ...
};

/// theta(alpha) = theta0 + sum a_k cos(k alpha) + b_k sin(k alpha), azimuth alpha.
SphericalCurve make_fourier_curve(const FourierPerturbation& coeffs, std::size_t n, double rho);

/// Geodesic distance between unit vectors.
double geodesic_gap(const Vec3& a, const Vec3& b);

/// Per-node velocity of the flow in unit-sphere coordinates: the geodesic
/// curvature vector with density on the radius-rho sphere, expressed as the
/// rate of change of the unit direction.
std::vector<Vec3> curvature_density_vector(const SphericalCurve& curve, const DensitySpec& density);

/// Largest step admitted by the explicit scheme: cfl * (min gap * rho)^2.
double admissible_step(const SphericalCurve& curve, double cfl = 0.25);

/// One explicit Euler step followed by projection back onto the sphere.
SphericalCurve flow_step(const SphericalCurve& curve, const DensitySpec& density, double dt_tilde,
                         double cfl = 0.25);

/// Resample at N equal geodesic gaps along a periodic cubic spline through the
/// nodes (projected to the sphere), node 0 fixed.
SphericalCurve reparametrize_arclength(const SphericalCurve& curve);

struct EnclosedRegion {
  double area = 0.0;       // rho^2-scaled area of the region with fraction <= 1/2
  bool on_left = true;     // that region lies to the left of the traversal
};

/// Area of the smaller enclosed region by spherical excess. Requires an embedded curve.
EnclosedRegion enclosed_area(const SphericalCurve& curve);

/// Signed-turning-angle area of the left region on the unit sphere, in (0, 4 pi).
/// Does not test embeddedness.
double left_area_unit(const SphericalCurve& curve);

double weighted_length(const SphericalCurve& curve, const DensitySpec& density);

CurveDiagnostics diagnose(const SphericalCurve& curve, const DensitySpec& density);

bool check_embedded(const SphericalCurve& curve);

struct SingularityOptions {
  std::size_t window = 50;
  double len_eps_rel = 1e-3;    // round-point length threshold, relative to rho
  double kpsi_eps_rel = 1e-5;   // psi-minimal threshold on |k_psi| * rho
  double round_tol = 0.05;      // isoperimetric ratio band around 1
  double blowup_ratio = 1e3;    // max |k| * length
};

struct NoSingularity {};
struct RoundPointCollapse {
  Vec3 location = Vec3::Zero();
};
struct PsiMinimalConvergence {};
struct CurvatureBlowup {};

using SingularityVerdict =
    std::variant<NoSingularity, RoundPointCollapse, PsiMinimalConvergence, CurvatureBlowup>;

std::string verdict_name(const SingularityVerdict& v);

SingularityVerdict detect_singularity(std::span<const CurveDiagnostics> history,
                                      const SingularityOptions& opts = {});

/// Curve snapshot text format: first line "N rho", then one "x y z" line per
/// node with 17 significant digits.
void write_snapshot(std::ostream& os, const SphericalCurve& curve);
SphericalCurve read_snapshot(std::istream& is);

struct SphereFlowOptions {
  double cfl = 0.25;
  int reparam_every = 25;
  int embed_check_every = 100;
  SingularityOptions singularity;
};

/// Stateful driver for the sphere flow: advances in ttilde with CFL-limited
/// steps, watches for singularities and tracks the gradient-flow and
/// embeddedness properties along the way.
class SphereFlow {
 public:
  SphereFlow(SphericalCurve initial, const DensitySpec& density, SphereFlowOptions opts = {});

  /// Advance to ttilde_target or until a singularity verdict or the step budget.
  /// Returns the verdict in force afterwards.
  const SingularityVerdict& advance_to(double ttilde_target,
                                       std::size_t max_steps = static_cast<std::size_t>(-1));

  bool terminated() const { return !std::holds_alternative<NoSingularity>(verdict_); }
  const SingularityVerdict& verdict() const { return verdict_; }
  double ttilde() const { return ttilde_; }
  /// ttilde at which the verdict was first reached.
  double verdict_ttilde() const { return verdict_ttilde_; }
  const SphericalCurve& curve() const { return curve_; }
  const CurveDiagnostics& diagnostics() const { return history_.back(); }
  std::size_t steps() const { return steps_; }

  /// Largest per-step increase of weighted length relative to its value
  /// (negative or zero when the length never increased).
  double worst_weighted_length_increase() const { return worst_increase_; }
  std::size_t embed_checks() const { return embed_checks_; }
  std::size_t embed_failures() const { return embed_failures_; }
  /// Number of times the tracked region crossed area fraction 1/2 and was re-chosen.
  std::size_t side_switches() const { return side_switches_; }
  /// Fine-grained area record (ttilde, rho^2-scaled area) appended every step.
  const std::vector<std::pair<double, double>>& area_record() const { return area_record_; }
  void set_record_area(bool on);

 private:
  void step(double dt);

  SphericalCurve curve_;
  DensitySpec density_;
  SphereFlowOptions opts_;
  std::vector<CurveDiagnostics> history_;
  std::vector<Vec3> velocity_;  // flow velocity of curve_
  double min_gap_ = 0.0;        // smallest unit-sphere gap of curve_
  SingularityVerdict verdict_ = NoSingularity{};
  double ttilde_ = 0.0;
  double verdict_ttilde_ = 0.0;
  std::size_t steps_ = 0;
  double worst_increase_ = -1.0;
  std::size_t embed_checks_ = 0;
  std::size_t embed_failures_ = 0;
  std::size_t side_switches_ = 0;
  bool record_area_ = false;
  std::vector<std::pair<double, double>> area_record_;
};

}  // namespace warpflow
