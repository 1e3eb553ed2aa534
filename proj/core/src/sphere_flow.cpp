#include "warpflow/sphere_flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "warpflow/errors.hpp"

namespace warpflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinGap = 1e-10;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::size_t prev_index(std::size_t i, std::size_t n) { return i == 0 ? n - 1 : i - 1; }
std::size_t next_index(std::size_t i, std::size_t n) { return i + 1 == n ? 0 : i + 1; }

Vec3 tangent_part(const Vec3& v, const Vec3& p) { return v - v.dot(p) * p; }

// Per-node discrete geometry shared by the velocity and the diagnostics.
struct NodeGeometry {
  Vec3 k_unit;   // geodesic curvature vector on the unit sphere
  Vec3 normal;   // unit conormal pointing into Omega
  double kappa;  // signed unit-sphere geodesic curvature, positive toward Omega
  double grad_normal;  // <grad psi, normal> on the unit sphere
};

std::vector<double> node_gaps(const std::vector<Vec3>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<double> gaps(n);
  for (std::size_t i = 0; i < n; ++i) gaps[i] = geodesic_gap(nodes[i], nodes[next_index(i, n)]);
  return gaps;
}

// gaps[i] is the gap from node i to node i + 1.
NodeGeometry node_geometry(const SphericalCurve& curve, const DensitySpec& density,
                           const std::vector<double>& gaps, std::size_t i) {
  const auto& nodes = curve.nodes();
  const std::size_t n = nodes.size();
  const Vec3& p = nodes[i];
  const Vec3& pm = nodes[prev_index(i, n)];
  const Vec3& pp = nodes[next_index(i, n)];
  const double hm = gaps[prev_index(i, n)];
  const double hp = gaps[i];
  if (hm < kMinGap || hp < kMinGap) {
    throw DiscretizationError("degenerate node spacing at node " + std::to_string(i) +
                              " (gap " + fmt(std::min(hm, hp)) + " < 1e-10)");
  }
  const Vec3 second = (2.0 / (hm + hp)) * ((pp - p) / hp - (p - pm) / hm);
  NodeGeometry g;
  g.k_unit = tangent_part(second, p);
  const Vec3 tangent = tangent_part(pp - pm, p).normalized();
  g.normal = curve.orientation() * p.cross(tangent);
  g.kappa = g.k_unit.dot(g.normal);
  g.grad_normal = density.angular.identically_zero ? 0.0 : density.psi_grad(p).dot(g.normal);
  return g;
}

std::vector<Vec3> velocity_field(const SphericalCurve& curve, const DensitySpec& density,
                                 const std::vector<double>& gaps) {
  const std::size_t n = curve.size();
  const double inv_rho2 = 1.0 / (curve.rho() * curve.rho());
  std::vector<Vec3> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeGeometry g = node_geometry(curve, density, gaps, i);
    const Vec3 v = g.k_unit - g.grad_normal * g.normal;
    out[i] = tangent_part(v, curve.nodes()[i]) * inv_rho2;
  }
  return out;
}

double step_bound(const std::vector<double>& gaps, double rho, double cfl) {
  const double h = *std::min_element(gaps.begin(), gaps.end()) * rho;
  return cfl * h * h;
}

double left_area_from(const std::vector<Vec3>& nodes) {
  const std::size_t n = nodes.size();
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = nodes[i];
    const Vec3 t_in = -tangent_part(nodes[prev_index(i, n)], p);
    const Vec3 t_out = tangent_part(nodes[next_index(i, n)], p);
    turning += std::atan2(p.dot(t_in.cross(t_out)), t_in.dot(t_out));
  }
  double area = std::fmod(2.0 * kPi - turning, 4.0 * kPi);
  if (area < 0.0) area += 4.0 * kPi;
  return area;
}

// Full diagnostics plus the unit-sphere area on the left of the traversal.
// Optionally also the flow velocity and the smallest gap, from the same pass.
CurveDiagnostics diagnose_with_left(const SphericalCurve& curve, const DensitySpec& density,
                                    double& left, std::vector<Vec3>* velocity = nullptr,
                                    double* min_gap = nullptr) {
  const auto& nodes = curve.nodes();
  const std::size_t n = nodes.size();
  const double rho = curve.rho();
  const auto gaps = node_gaps(nodes);
  if (velocity) velocity->resize(n);
  if (min_gap) *min_gap = *std::min_element(gaps.begin(), gaps.end());
  CurveDiagnostics d;
  d.rho = rho;
  double len_unit = 0.0;
  double weighted = 0.0;
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const NodeGeometry g = node_geometry(curve, density, gaps, i);
    if (velocity) {
      (*velocity)[i] = tangent_part(g.k_unit - g.grad_normal * g.normal, nodes[i]) * (1.0 / (rho * rho));
    }
    d.max_abs_k = std::max(d.max_abs_k, std::abs(g.kappa));
    d.max_abs_k_psi = std::max(d.max_abs_k_psi, std::abs(g.kappa - g.grad_normal));
    const Vec3 mid = (nodes[i] + nodes[next_index(i, n)]).normalized();
    len_unit += gaps[i];
    centroid += gaps[i] * mid;
    weighted += (density.angular.identically_zero ? 1.0 : std::exp(density.psi(mid))) * gaps[i];
  }
  d.max_abs_k /= rho;
  d.max_abs_k_psi /= rho;
  d.length = len_unit * rho;
  d.weighted_length = weighted * rho;
  left = left_area_from(nodes);
  const double area_unit = std::min(left, 4.0 * kPi - left);
  d.enclosed_area = area_unit * rho * rho;
  d.area_fraction = area_unit / (4.0 * kPi);
  d.isoperimetric_ratio = len_unit * len_unit / (area_unit * (4.0 * kPi - area_unit));
  const double cn = centroid.norm();
  d.centroid = cn > 0.0 ? Vec3(centroid / cn) : Vec3(nodes.front());
  return d;
}

// Periodic cubic spline through the nodes, parametrized on [0, period].
class PeriodicSpline3 {
 public:
  PeriodicSpline3(const std::vector<double>& knots, const std::vector<Vec3>& values)
      : knots_(knots), values_(values), second_(values.size(), Vec3::Zero()) {
    const std::size_t n = values.size();
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = knots[i + 1] - knots[i];
    // Cyclic tridiagonal system for the second derivatives, by Sherman-Morrison.
    std::vector<double> sub(n), diag(n), sup(n);
    std::vector<Vec3> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t im = prev_index(i, n), ip = next_index(i, n);
      sub[i] = h[im];
      diag[i] = 2.0 * (h[im] + h[i]);
      sup[i] = h[i];
      rhs[i] = 6.0 * ((values[ip] - values[i]) / h[i] - (values[i] - values[im]) / h[im]);
    }
    const double gamma = -diag[0];
    const double alpha = sup[n - 1];  // corner (n-1, 0)
    const double beta = sub[0];       // corner (0, n-1)
    std::vector<double> d = diag;
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    const auto x = solve(sub, d, sup, rhs);
    const auto z = solve(sub, d, sup, u);
    const double vz = z[0] + beta / gamma * z[n - 1];
    const Vec3 vx = x[0] + beta / gamma * x[n - 1];
    const Vec3 factor = vx / (1.0 + vz);
    for (std::size_t i = 0; i < n; ++i) second_[i] = x[i] - z[i] * factor;
  }

  Vec3 operator()(double u) const {
    const std::size_t n = values_.size();
    const double period = knots_[n];
    u -= period * std::floor(u / period);
    std::size_t i = std::size_t(std::upper_bound(knots_.begin(), knots_.end(), u) - knots_.begin());
    i = std::min(std::max<std::size_t>(i, 1), n) - 1;
    const std::size_t ip = next_index(i, n);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - u) / h;
    const double b = 1.0 - a;
    return a * values_[i] + b * values_[ip] +
           ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[ip]) * (h * h / 6.0);
  }

 private:
  template <class T>
  static std::vector<T> solve(const std::vector<double>& sub, const std::vector<double>& diag,
                              const std::vector<double>& sup, std::vector<T> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> c(n);
    double denom = diag[0];
    c[0] = sup[0] / denom;
    rhs[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = diag[i] - sub[i] * c[i - 1];
      c[i] = sup[i] / denom;
      rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = rhs[i] - c[i] * rhs[i + 1];
    return rhs;
  }

  std::vector<double> knots_;
  std::vector<Vec3> values_;
  std::vector<Vec3> second_;
};

}  // namespace

// ---------------------------------------------------------------------------
// SphericalCurve

SphericalCurve::SphericalCurve(std::vector<Vec3> nodes, double rho, std::optional<bool> omega_on_left)
    : nodes_(std::move(nodes)), rho_(rho), omega_on_left_(true) {
  if (nodes_.size() < kMinNodes) {
    throw GeometryError("a spherical curve needs N >= 16 nodes, got " + std::to_string(nodes_.size()));
  }
  if (!(rho_ > 0.0) || !std::isfinite(rho_)) throw GeometryError("sphere radius must be positive");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (std::abs(nodes_[i].norm() - 1.0) > 1e-12) {
      throw GeometryError("node " + std::to_string(i) + " is not a unit vector");
    }
    if ((nodes_[next_index(i, nodes_.size())] - nodes_[i]).squaredNorm() < kMinGap * kMinGap) {
      throw DiscretizationError("consecutive nodes " + std::to_string(i) + " and " +
                                std::to_string(next_index(i, nodes_.size())) + " coincide");
    }
  }
  omega_on_left_ = omega_on_left ? *omega_on_left : left_area_unit(*this) <= 2.0 * kPi;
}

SphericalCurve SphericalCurve::with_nodes(std::vector<Vec3> nodes) const {
  return SphericalCurve(std::move(nodes), rho_, omega_on_left_);
}

SphericalCurve SphericalCurve::with_rho(double rho) const {
  return SphericalCurve(nodes_, rho, omega_on_left_);
}

// ---------------------------------------------------------------------------
// Constructors

SphericalCurve make_latitude_circle(double theta0, std::size_t n, double rho) {
  if (!(theta0 > 0.0 && theta0 <= kPi / 2)) {
    throw GeometryError("latitude polar angle must lie in (0, pi/2], got " + fmt(theta0));
  }
  if (n < SphericalCurve::kMinNodes) throw GeometryError("latitude circle needs N >= 16");
  std::vector<Vec3> nodes(n);
  const double st = std::sin(theta0);
  const double ct = theta0 == kPi / 2 ? 0.0 : std::cos(theta0);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * double(i) / double(n);
    nodes[i] = Vec3(st * std::cos(a), st * std::sin(a), ct).normalized();
  }
  return SphericalCurve(std::move(nodes), rho);
}

SphericalCurve make_fourier_curve(const FourierPerturbation& coeffs, std::size_t n, double rho) {
  if (n < SphericalCurve::kMinNodes) throw GeometryError("fourier curve needs N >= 16");
  const bool unperturbed =
      std::all_of(coeffs.cos_coeffs.begin(), coeffs.cos_coeffs.end(), [](double c) { return c == 0.0; }) &&
      std::all_of(coeffs.sin_coeffs.begin(), coeffs.sin_coeffs.end(), [](double c) { return c == 0.0; });
  if (unperturbed) return make_latitude_circle(coeffs.theta0, n, rho);

  std::vector<Vec3> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double alpha = 2.0 * kPi * double(i) / double(n);
    double theta = coeffs.theta0;
    for (std::size_t k = 0; k < coeffs.cos_coeffs.size(); ++k) {
      theta += coeffs.cos_coeffs[k] * std::cos(double(k + 1) * alpha);
    }
    for (std::size_t k = 0; k < coeffs.sin_coeffs.size(); ++k) {
      theta += coeffs.sin_coeffs[k] * std::sin(double(k + 1) * alpha);
    }
    nodes[i] = Vec3(std::sin(theta) * std::cos(alpha), std::sin(theta) * std::sin(alpha),
                    std::cos(theta))
                   .normalized();
  }
  SphericalCurve curve = [&] {
    try {
      return SphericalCurve(std::move(nodes), rho);
    } catch (const Error& e) {
      throw ConstructionError(std::string("fourier curve is degenerate: ") + e.what());
    }
  }();
  if (!check_embedded(curve)) {
    throw ConstructionError("fourier perturbation produces a self-intersecting curve");
  }
  return curve;
}

double geodesic_gap(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

// ---------------------------------------------------------------------------
// Flow kernel

std::vector<Vec3> curvature_density_vector(const SphericalCurve& curve, const DensitySpec& density) {
  return velocity_field(curve, density, node_gaps(curve.nodes()));
}

double admissible_step(const SphericalCurve& curve, double cfl) {
  return step_bound(node_gaps(curve.nodes()), curve.rho(), cfl);
}

SphericalCurve flow_step(const SphericalCurve& curve, const DensitySpec& density, double dt_tilde,
                         double cfl) {
  const auto gaps = node_gaps(curve.nodes());
  const double bound = step_bound(gaps, curve.rho(), cfl);
  if (!(dt_tilde >= 0.0) || dt_tilde > bound * (1.0 + 1e-12)) {
    throw StepError("time step " + fmt(dt_tilde) + " violates the CFL bound " + fmt(bound) +
                        " = cfl * (min gap * rho)^2",
                    bound);
  }
  const auto velocity = velocity_field(curve, density, gaps);
  std::vector<Vec3> nodes(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    nodes[i] = (curve.nodes()[i] + dt_tilde * velocity[i]).normalized();
  }
  return curve.with_nodes(std::move(nodes));
}

SphericalCurve reparametrize_arclength(const SphericalCurve& curve) {
  const auto& nodes = curve.nodes();
  const std::size_t n = nodes.size();
  std::vector<double> knots(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    knots[i + 1] = knots[i] + geodesic_gap(nodes[i], nodes[next_index(i, n)]);
  }
  const double period = knots[n];
  const PeriodicSpline3 spline(knots, nodes);

  // Sample parameters, corrected until the geodesic gaps of the samples agree.
  std::vector<double> sigma(n + 1);
  for (std::size_t j = 0; j <= n; ++j) sigma[j] = period * double(j) / double(n);
  std::vector<Vec3> out(n);
  std::vector<double> reached(n + 1, 0.0);
  for (int pass = 0; pass < 20; ++pass) {
    for (std::size_t j = 0; j < n; ++j) out[j] = spline(sigma[j]).normalized();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double g = geodesic_gap(out[j], out[next_index(j, n)]);
      lo = std::min(lo, g);
      hi = std::max(hi, g);
      reached[j + 1] = reached[j] + g;
    }
    if (hi - lo <= 1e-11 * hi) break;
    std::vector<double> next(n + 1);
    next[0] = 0.0;
    next[n] = period;
    std::size_t k = 0;
    for (std::size_t j = 1; j < n; ++j) {
      const double target = reached[n] * double(j) / double(n);
      while (k + 1 < n && reached[k + 1] < target) ++k;
      const double f = (target - reached[k]) / (reached[k + 1] - reached[k]);
      next[j] = sigma[k] + f * (sigma[k + 1] - sigma[k]);
    }
    sigma = std::move(next);
  }
  out[0] = nodes[0];
  return curve.with_nodes(std::move(out));
}

// ---------------------------------------------------------------------------
// Measurements

double left_area_unit(const SphericalCurve& curve) { return left_area_from(curve.nodes()); }

EnclosedRegion enclosed_area(const SphericalCurve& curve) {
  if (!check_embedded(curve)) throw GeometryError("enclosed area requires an embedded curve");
  const double left = left_area_unit(curve);
  const double rho2 = curve.rho() * curve.rho();
  if (left <= 2.0 * kPi) return {left * rho2, true};
  return {(4.0 * kPi - left) * rho2, false};
}

double weighted_length(const SphericalCurve& curve, const DensitySpec& density) {
  const auto& nodes = curve.nodes();
  const std::size_t n = nodes.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = nodes[i];
    const Vec3& b = nodes[next_index(i, n)];
    const double gap = geodesic_gap(a, b);
    const double weight = density.angular.identically_zero ? 1.0 : std::exp(density.psi((a + b).normalized()));
    sum += weight * gap;
  }
  return sum * curve.rho();
}

CurveDiagnostics diagnose(const SphericalCurve& curve, const DensitySpec& density) {
  double left = 0.0;
  return diagnose_with_left(curve, density, left);
}

bool check_embedded(const SphericalCurve& curve) {
  const auto& nodes = curve.nodes();
  const std::size_t n = nodes.size();
  struct Arc {
    Vec3 a, b, normal, mid;
    double half;  // half of the arc length
  };
  std::vector<Arc> arcs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = nodes[i];
    const Vec3& b = nodes[next_index(i, n)];
    arcs[i] = {a, b, a.cross(b), (a + b).normalized(), 0.5 * geodesic_gap(a, b)};
  }
  auto on_arc = [](const Arc& arc, const Vec3& x) {
    return std::abs(geodesic_gap(arc.a, x) + geodesic_gap(x, arc.b) - 2.0 * arc.half) < 1e-13;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Arc& u = arcs[i];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the wrap
      const Arc& v = arcs[j];
      const double reach = u.half + v.half;
      if (reach < kPi && u.mid.dot(v.mid) < std::cos(reach) - 1e-12) continue;

      const double sc = u.normal.dot(v.a);
      const double sd = u.normal.dot(v.b);
      if (sc * sd > 0.0) continue;
      const double sa = v.normal.dot(u.a);
      const double sb = v.normal.dot(u.b);
      if (sa * sb > 0.0) continue;
      Vec3 x = u.normal.cross(v.normal);
      if (x.norm() < 1e-15) {
        // Arcs on a common great circle: they meet only if they overlap.
        if (on_arc(u, v.a) || on_arc(u, v.b) || on_arc(v, u.a) || on_arc(v, u.b)) return false;
        continue;
      }
      if (x.dot(u.a + u.b) < 0.0) x = -x;
      if (x.dot(v.a + v.b) > 0.0) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Singularities

std::string verdict_name(const SingularityVerdict& v) {
  return std::visit(
      [](const auto& e) -> std::string {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, NoSingularity>) return "None";
        if constexpr (std::is_same_v<T, RoundPointCollapse>) return "RoundPointCollapse";
        if constexpr (std::is_same_v<T, PsiMinimalConvergence>) return "PsiMinimalConvergence";
        return "CurvatureBlowup";
      },
      v);
}

SingularityVerdict detect_singularity(std::span<const CurveDiagnostics> history,
                                      const SingularityOptions& opts) {
  if (history.empty()) return NoSingularity{};
  const CurveDiagnostics& last = history.back();
  const double len_eps = opts.len_eps_rel * last.rho;
  if (last.length < len_eps && std::abs(last.isoperimetric_ratio - 1.0) <= opts.round_tol) {
    return RoundPointCollapse{last.centroid};
  }
  if (last.max_abs_k * last.length > opts.blowup_ratio) return CurvatureBlowup{};
  if (opts.window == 0 || history.size() < opts.window) return NoSingularity{};
  const auto recent = history.last(opts.window);
  const bool calm = std::all_of(recent.begin(), recent.end(), [&](const CurveDiagnostics& d) {
    return d.max_abs_k_psi < opts.kpsi_eps_rel / d.rho && d.length > 10.0 * opts.len_eps_rel * d.rho;
  });
  if (calm) return PsiMinimalConvergence{};
  return NoSingularity{};
}

// ---------------------------------------------------------------------------
// Snapshot files

void write_snapshot(std::ostream& os, const SphericalCurve& curve) {
  os << curve.size() << ' ' << std::setprecision(17) << curve.rho() << '\n';
  for (const Vec3& p : curve.nodes()) {
    os << std::setprecision(17) << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
}

SphericalCurve read_snapshot(std::istream& is) {
  std::size_t n = 0;
  double rho = 0.0;
  if (!(is >> n >> rho)) throw ConfigError("snapshot header must be 'N rho'");
  std::vector<Vec3> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x, y, z;
    if (!(is >> x >> y >> z)) {
      throw ConfigError("snapshot truncated at node " + std::to_string(i));
    }
    nodes[i] = Vec3(x, y, z);
  }
  return SphericalCurve(std::move(nodes), rho);
}

// ---------------------------------------------------------------------------
// Driver

SphereFlow::SphereFlow(SphericalCurve initial, const DensitySpec& density, SphereFlowOptions opts)
    : curve_(std::move(initial)), density_(density), opts_(opts) {
  double left = 0.0;
  history_.push_back(diagnose_with_left(curve_, density_, left, &velocity_, &min_gap_));
}

void SphereFlow::set_record_area(bool on) {
  record_area_ = on;
  if (on && area_record_.empty()) area_record_.emplace_back(ttilde_, history_.back().enclosed_area);
}

const SingularityVerdict& SphereFlow::advance_to(double ttilde_target, std::size_t max_steps) {
  std::size_t taken = 0;
  while (ttilde_ < ttilde_target && !terminated() && taken < max_steps) {
    const double h = min_gap_ * curve_.rho();
    double dt = opts_.cfl * h * h;
    bool lands = false;
    if (ttilde_ + dt >= ttilde_target) {
      dt = ttilde_target - ttilde_;
      lands = true;
    }
    step(dt);
    if (lands) ttilde_ = ttilde_target;
    ++taken;
  }
  return verdict_;
}

void SphereFlow::step(double dt) {
  const double before = history_.back().weighted_length;
  // Same update as flow_step, with the velocity kept from the last diagnostics.
  const double h = min_gap_ * curve_.rho();
  const double bound = opts_.cfl * h * h;
  if (!(dt >= 0.0) || dt > bound * (1.0 + 1e-12)) {
    throw StepError("time step " + fmt(dt) + " violates the CFL bound " + fmt(bound) +
                        " = cfl * (min gap * rho)^2",
                    bound);
  }
  std::vector<Vec3> nodes(curve_.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i] = (curve_.nodes()[i] + dt * velocity_[i]).normalized();
  }
  curve_ = curve_.with_nodes(std::move(nodes));
  ++steps_;
  ttilde_ += dt;
  if (opts_.reparam_every > 0 && steps_ % std::size_t(opts_.reparam_every) == 0) {
    curve_ = reparametrize_arclength(curve_);
  }
  if (opts_.embed_check_every > 0 && steps_ % std::size_t(opts_.embed_check_every) == 0) {
    ++embed_checks_;
    if (!check_embedded(curve_)) ++embed_failures_;
  }

  double left = 0.0;
  CurveDiagnostics d = diagnose_with_left(curve_, density_, left, &velocity_, &min_gap_);
  // Re-choose the tracked side if Omega grew past half the sphere.
  const double omega_area = curve_.omega_on_left() ? left : 4.0 * kPi - left;
  if (omega_area > 2.0 * kPi) {
    curve_ = SphericalCurve(curve_.nodes(), curve_.rho(), !curve_.omega_on_left());
    ++side_switches_;
    d = diagnose_with_left(curve_, density_, left, &velocity_, &min_gap_);
  }
  worst_increase_ = std::max(worst_increase_, (d.weighted_length - before) / before);
  if (record_area_) area_record_.emplace_back(ttilde_, d.enclosed_area);
  history_.push_back(d);
  const std::size_t keep = std::max<std::size_t>(opts_.singularity.window, 1);
  if (history_.size() > 2 * keep) history_.erase(history_.begin(), history_.end() - keep);

  verdict_ = detect_singularity(history_, opts_.singularity);
  if (terminated()) verdict_ttilde_ = ttilde_;
}

}  // namespace warpflow
