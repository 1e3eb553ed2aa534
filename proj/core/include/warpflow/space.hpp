#pragma once

// Rotationally symmetric ambient space [0, inf) x_w S^2 with a split density
// xi = phi(r) + psi(direction).

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace warpflow {

using Vec3 = Eigen::Vector3d;

enum class WarpKind { Euclidean, Hyperbolic, Power, Tabulated };

std::string to_string(WarpKind kind);

/// Known large-r behaviour of the warping function.
struct WarpTail {
  enum class Shape { Power, Exponential };
  Shape shape = Shape::Power;
  double exponent = 1.0;  // w ~ r^exponent when shape == Power
};

/// Warping function w with its derivative. Immutable after construction.
class WarpedSpace {
 public:
  static WarpedSpace euclidean();
  static WarpedSpace hyperbolic();
  /// w(r) = r^p for r >= glue, blended smoothly into w(r) = r on [0, glue].
  static WarpedSpace power(double p, double glue = 1.0);
  /// Natural cubic spline through (r, w) samples; w' comes from the spline.
  static WarpedSpace tabulated(std::vector<double> radii, std::vector<double> values,
                               std::optional<WarpTail> tail = std::nullopt);

  double w(double r) const;
  double w_prime(double r) const;

  double domain_floor() const { return floor_; }
  /// Largest radius at which w is evaluable (infinity for presets).
  double domain_ceiling() const { return ceiling_; }
  WarpKind kind() const { return kind_; }
  const std::optional<WarpTail>& declared_tail() const { return tail_; }
  std::string describe() const;

 private:
  WarpedSpace() = default;
  void check(double r) const;

  WarpKind kind_ = WarpKind::Euclidean;
  std::function<double(double)> w_;
  std::function<double(double)> w_prime_;
  double floor_ = 0.0;
  double ceiling_ = 0.0;
  std::optional<WarpTail> tail_;
  std::string label_;
};

/// Radial density phi with its derivative.
struct RadialDensity {
  std::function<double(double)> phi;
  std::function<double(double)> phi_prime;
  bool extends_c1_to_zero = true;
  std::string label;

  static RadialDensity none();
  /// phi(r) = -mu^2 r^2 / 2
  static RadialDensity gaussian(double mu);
  /// phi(r) = a ln r + b r^2 / 2 + c / r
  static RadialDensity log_power(double a, double b, double c);
  static RadialDensity tabulated(std::vector<double> radii, std::vector<double> values);
};

/// Angular density psi on the unit sphere with its intrinsic gradient.
struct AngularDensity {
  std::function<double(const Vec3&)> psi;
  std::function<Vec3(const Vec3&)> psi_grad;
  bool identically_zero = false;
  std::string label;

  static AngularDensity zero();
  static AngularDensity constant(double c);
  /// psi(p) = a * p_z^2
  static AngularDensity z_squared(double a);
  /// Bilinear interpolation on a latitude-longitude grid. values is row-major
  /// with n_theta rows spanning polar angle [0, pi] and n_lambda columns
  /// spanning longitude [0, 2 pi) periodically.
  static AngularDensity latlon_table(std::size_t n_theta, std::size_t n_lambda,
                                     std::vector<double> values);
};

struct DensitySpec {
  RadialDensity radial;
  AngularDensity angular;

  double phi(double r) const { return radial.phi(r); }
  double phi_prime(double r) const { return radial.phi_prime(r); }
  bool phi_extends_c1_to_zero() const { return radial.extends_c1_to_zero; }
  double psi(const Vec3& p) const { return angular.psi(p); }
  Vec3 psi_grad(const Vec3& p) const { return angular.psi_grad(p); }
};

/// B(r) = w'(r)/w(r) + phi'(r).
double eval_B(const WarpedSpace& space, const DensitySpec& density, double r);

/// Area of the geodesic sphere S_r, 4 pi w(r)^2.
double sphere_area(const WarpedSpace& space, double r);

/// Weighted length 2 pi w(r) e^{phi(r)} of the circle C_r in the plane (R^2, g_w, phi).
double weighted_circle_length(const WarpedSpace& space, const DensitySpec& density, double r);

/// Roots of B in [r_lo, r_hi]: 1024-sample sign scan followed by bisection.
std::vector<double> find_B_roots(const WarpedSpace& space, const DensitySpec& density,
                                 double r_lo, double r_hi, double tol);

enum class ConformalType { Parabolic, Hyperbolic, Inconclusive };
enum class ConformalMode { DeclaredAsymptotics, NumericTail };

std::string to_string(ConformalType type);

ConformalType classify_conformal_type(const WarpedSpace& space, double r_start, ConformalMode mode);

/// Verdict of the dyadic-window test for an improper integral.
struct TailEstimate {
  enum class Verdict { Converges, Diverges, Inconclusive };
  Verdict verdict = Verdict::Inconclusive;
  double partial_sum = 0.0;  // sum of all window integrals evaluated
};

/// Integrates f over dyadic windows [s 2^k, s 2^{k+1}] (outward) or
/// [s 2^{-k-1}, s 2^{-k}] (toward zero) for k < windows. The last five
/// window integrals decide: each shrinking by a factor <= 1/2 means
/// convergence, non-decreasing means divergence.
TailEstimate dyadic_tail(const std::function<double(double)>& f, double start, bool outward,
                         int windows = 30);

}  // namespace warpflow
