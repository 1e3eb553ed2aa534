#include "warpflow/space.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "warpflow/errors.hpp"
#include "warpflow/interp.hpp"

namespace warpflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// C-infinity step from 0 (x <= 0) to 1 (x >= 1), flat at both ends.
double bump(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double bump_prime(double x) { return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = bump(x);
  const double b = bump(1.0 - x);
  return a / (a + b);
}

double smooth_step_prime(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double a = bump(x);
  const double b = bump(1.0 - x);
  const double da = bump_prime(x);
  const double db = -bump_prime(1.0 - x);
  return (da * b - a * db) / ((a + b) * (a + b));
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

std::string to_string(WarpKind kind) {
  switch (kind) {
    case WarpKind::Euclidean: return "euclidean";
    case WarpKind::Hyperbolic: return "hyperbolic";
    case WarpKind::Power: return "power";
    case WarpKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

std::string to_string(ConformalType type) {
  switch (type) {
    case ConformalType::Parabolic: return "Parabolic";
    case ConformalType::Hyperbolic: return "Hyperbolic";
    case ConformalType::Inconclusive: return "Inconclusive";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// WarpedSpace

WarpedSpace WarpedSpace::euclidean() {
  WarpedSpace s;
  s.kind_ = WarpKind::Euclidean;
  s.w_ = [](double r) { return r; };
  s.w_prime_ = [](double) { return 1.0; };
  s.floor_ = 0.0;
  s.ceiling_ = kInf;
  s.tail_ = WarpTail{WarpTail::Shape::Power, 1.0};
  s.label_ = "euclidean";
  return s;
}

WarpedSpace WarpedSpace::hyperbolic() {
  WarpedSpace s;
  s.kind_ = WarpKind::Hyperbolic;
  s.w_ = [](double r) { return std::sinh(r); };
  s.w_prime_ = [](double r) { return std::cosh(r); };
  s.floor_ = 0.0;
  s.ceiling_ = kInf;
  s.tail_ = WarpTail{WarpTail::Shape::Exponential, 0.0};
  s.label_ = "hyperbolic";
  return s;
}

WarpedSpace WarpedSpace::power(double p, double glue) {
  if (!(p > 0.0)) throw ConfigError("power warp exponent must be positive, got " + fmt(p));
  if (!(glue > 0.0)) throw ConfigError("power warp glue radius must be positive, got " + fmt(glue));
  WarpedSpace s;
  s.kind_ = WarpKind::Power;
  s.w_ = [p, glue](double r) {
    const double sigma = smooth_step(r / glue);
    return (1.0 - sigma) * r + sigma * std::pow(r, p);
  };
  s.w_prime_ = [p, glue](double r) {
    const double sigma = smooth_step(r / glue);
    const double dsigma = smooth_step_prime(r / glue) / glue;
    const double rp = std::pow(r, p);
    return (1.0 - sigma) + sigma * p * rp / r + dsigma * (rp - r);
  };
  s.floor_ = 0.0;
  s.ceiling_ = kInf;
  s.tail_ = WarpTail{WarpTail::Shape::Power, p};
  s.label_ = "power(p=" + fmt(p) + ", glue=" + fmt(glue) + ")";
  return s;
}

WarpedSpace WarpedSpace::tabulated(std::vector<double> radii, std::vector<double> values,
                                   std::optional<WarpTail> tail) {
  for (double v : values) {
    if (!(v > 0.0)) throw ConfigError("tabulated warp values must be positive");
  }
  auto spline = std::make_shared<CubicSpline>(std::move(radii), std::move(values));
  WarpedSpace s;
  s.kind_ = WarpKind::Tabulated;
  s.w_ = [spline](double r) { return (*spline)(r); };
  s.w_prime_ = [spline](double r) { return spline->derivative(r); };
  s.floor_ = spline->front();
  s.ceiling_ = spline->back();
  s.tail_ = tail;
  s.label_ = "tabulated[" + fmt(spline->front()) + ", " + fmt(spline->back()) + "]";
  return s;
}

void WarpedSpace::check(double r) const {
  if (!(r > floor_)) {
    throw DomainError("radius " + fmt(r) + " is at or below the domain floor " + fmt(floor_));
  }
  if (r > ceiling_) {
    throw DomainError("radius " + fmt(r) + " is above the tabulated range ending at " + fmt(ceiling_));
  }
}

double WarpedSpace::w(double r) const {
  check(r);
  return w_(r);
}

double WarpedSpace::w_prime(double r) const {
  check(r);
  return w_prime_(r);
}

std::string WarpedSpace::describe() const { return label_; }

// ---------------------------------------------------------------------------
// Densities

RadialDensity RadialDensity::none() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }, true, "none"};
}

RadialDensity RadialDensity::gaussian(double mu) {
  if (!(mu > 0.0)) throw ConfigError("gaussian mu must be positive, got " + fmt(mu));
  const double m2 = mu * mu;
  return {[m2](double r) { return -0.5 * m2 * r * r; }, [m2](double r) { return -m2 * r; }, true,
          "gaussian(mu=" + fmt(mu) + ")"};
}

RadialDensity RadialDensity::log_power(double a, double b, double c) {
  return {[a, b, c](double r) { return a * std::log(r) + 0.5 * b * r * r + c / r; },
          [a, b, c](double r) { return a / r + b * r - c / (r * r); },
          a == 0.0 && c == 0.0,
          "log_power(a=" + fmt(a) + ", b=" + fmt(b) + ", c=" + fmt(c) + ")"};
}

RadialDensity RadialDensity::tabulated(std::vector<double> radii, std::vector<double> values) {
  auto spline = std::make_shared<CubicSpline>(std::move(radii), std::move(values));
  const bool from_zero = spline->front() <= 0.0;
  return {[spline](double r) { return (*spline)(r); },
          [spline](double r) { return spline->derivative(r); }, from_zero, "tabulated"};
}

AngularDensity AngularDensity::zero() {
  return {[](const Vec3&) { return 0.0; }, [](const Vec3&) { return Vec3::Zero().eval(); }, true,
          "zero"};
}

AngularDensity AngularDensity::constant(double c) {
  return {[c](const Vec3&) { return c; }, [](const Vec3&) { return Vec3::Zero().eval(); }, false,
          "constant(" + fmt(c) + ")"};
}

AngularDensity AngularDensity::z_squared(double a) {
  return {[a](const Vec3& p) { return a * p.z() * p.z(); },
          [a](const Vec3& p) {
            const Vec3 g(0.0, 0.0, 2.0 * a * p.z());
            return Vec3(g - g.dot(p) * p);
          },
          a == 0.0, "z_squared(a=" + fmt(a) + ")"};
}

AngularDensity AngularDensity::latlon_table(std::size_t n_theta, std::size_t n_lambda,
                                            std::vector<double> values) {
  if (n_theta < 2 || n_lambda < 2) throw ConfigError("psi table needs at least a 2x2 grid");
  if (values.size() != n_theta * n_lambda) {
    throw ConfigError("psi table has " + std::to_string(values.size()) + " values, expected " +
                      std::to_string(n_theta * n_lambda));
  }
  struct Grid {
    std::size_t nt, nl;
    std::vector<double> v;
    double dtheta, dlambda;

    double at(std::size_t i, std::size_t j) const { return v[i * nl + (j % nl)]; }

    // Returns psi, d psi/d theta, d psi/d lambda of the bilinear interpolant.
    std::array<double, 3> sample(double theta, double lambda) const {
      double u = theta / dtheta;
      double vv = lambda / dlambda;
      auto i = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, double(nt - 2)));
      auto j = static_cast<std::size_t>(std::floor(vv)) % nl;
      const double fu = u - double(i);
      const double fv = vv - std::floor(vv);
      const double q00 = at(i, j), q01 = at(i, j + 1), q10 = at(i + 1, j), q11 = at(i + 1, j + 1);
      const double val = (1 - fu) * ((1 - fv) * q00 + fv * q01) + fu * ((1 - fv) * q10 + fv * q11);
      const double dth = (((1 - fv) * q10 + fv * q11) - ((1 - fv) * q00 + fv * q01)) / dtheta;
      const double dla = (((1 - fu) * q01 + fu * q11) - ((1 - fu) * q00 + fu * q10)) / dlambda;
      return {val, dth, dla};
    }
  };
  auto grid = std::make_shared<Grid>(Grid{n_theta, n_lambda, std::move(values),
                                          kPi / double(n_theta - 1), 2 * kPi / double(n_lambda)});
  auto angles = [](const Vec3& p) {
    const double theta = std::acos(std::clamp(p.z(), -1.0, 1.0));
    double lambda = std::atan2(p.y(), p.x());
    if (lambda < 0) lambda += 2 * kPi;
    return std::pair{theta, lambda};
  };
  return {[grid, angles](const Vec3& p) {
            auto [th, la] = angles(p);
            return grid->sample(th, la)[0];
          },
          [grid, angles](const Vec3& p) {
            auto [th, la] = angles(p);
            auto s = grid->sample(th, la);
            const Vec3 e_theta(std::cos(th) * std::cos(la), std::cos(th) * std::sin(la), -std::sin(th));
            const Vec3 e_lambda(-std::sin(la), std::cos(la), 0.0);
            const double st = std::sin(th);
            Vec3 g = s[1] * e_theta;
            if (st > 1e-12) g += (s[2] / st) * e_lambda;
            return Vec3(g - g.dot(p) * p);
          },
          false, "latlon_table"};
}

// ---------------------------------------------------------------------------
// Scalar quantities

double eval_B(const WarpedSpace& space, const DensitySpec& density, double r) {
  return space.w_prime(r) / space.w(r) + density.phi_prime(r);
}

double sphere_area(const WarpedSpace& space, double r) {
  const double w = space.w(r);
  return 4.0 * kPi * w * w;
}

double weighted_circle_length(const WarpedSpace& space, const DensitySpec& density, double r) {
  return 2.0 * kPi * space.w(r) * std::exp(density.phi(r));
}

std::vector<double> find_B_roots(const WarpedSpace& space, const DensitySpec& density,
                                 double r_lo, double r_hi, double tol) {
  if (!(r_lo < r_hi)) throw RangeError("root scan needs r_lo < r_hi");
  constexpr int kSamples = 1024;
  auto B = [&](double r) { return eval_B(space, density, r); };

  std::vector<double> roots;
  double x_prev = r_lo;
  double b_prev = B(r_lo);
  if (b_prev == 0.0) roots.push_back(r_lo);
  for (int i = 1; i < kSamples; ++i) {
    const double x = r_lo + (r_hi - r_lo) * double(i) / double(kSamples - 1);
    const double b = B(x);
    if (b == 0.0) {
      roots.push_back(x);
    } else if (b_prev != 0.0 && std::signbit(b) != std::signbit(b_prev)) {
      double lo = x_prev, hi = x, b_lo = b_prev;
      double mid = 0.5 * (lo + hi);
      for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double bm = B(mid);
        if (bm == 0.0 || ((hi - lo) <= tol && std::abs(bm) <= tol)) break;
        if (std::signbit(bm) == std::signbit(b_lo)) {
          lo = mid;
          b_lo = bm;
        } else {
          hi = mid;
        }
        if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
      }
      roots.push_back(mid);
    }
    x_prev = x;
    b_prev = b;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

TailEstimate dyadic_tail(const std::function<double(double)>& f, double start, bool outward,
                         int windows) {
  constexpr int kPanels = 64;  // Simpson panels per window, in log r
  std::vector<double> integrals;
  integrals.reserve(std::size_t(windows));
  TailEstimate est;
  for (int k = 0; k < windows; ++k) {
    const double a = outward ? std::ldexp(start, k) : std::ldexp(start, -k - 1);
    const double b = 2.0 * a;
    const double ua = std::log(a), ub = std::log(b);
    const double h = (ub - ua) / kPanels;
    double sum = 0.0;
    for (int i = 0; i <= kPanels; ++i) {
      const double u = ua + h * i;
      const double r = std::exp(u);
      const double g = f(r) * r;
      const double weight = (i == 0 || i == kPanels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      sum += weight * g;
    }
    const double value = std::abs(sum * h / 3.0);
    if (!std::isfinite(value)) {
      est.verdict = TailEstimate::Verdict::Diverges;
      est.partial_sum = kInf;
      return est;
    }
    integrals.push_back(value);
    est.partial_sum += value;
  }
  if (integrals.size() < 6) return est;
  const std::size_t n = integrals.size();
  bool shrinking = true;
  bool non_decreasing = true;
  for (std::size_t i = n - 5; i < n; ++i) {
    const double prev = integrals[i - 1];
    const double cur = integrals[i];
    if (!(cur <= 0.5 * prev * (1.0 + 1e-9))) shrinking = false;
    if (!(cur >= prev * (1.0 - 1e-9))) non_decreasing = false;  // equal windows: log divergence
  }
  if (shrinking) {
    est.verdict = TailEstimate::Verdict::Converges;
  } else if (non_decreasing) {
    est.verdict = TailEstimate::Verdict::Diverges;
  }
  return est;
}

ConformalType classify_conformal_type(const WarpedSpace& space, double r_start, ConformalMode mode) {
  if (!(r_start > space.domain_floor())) {
    throw DomainError("conformal test start radius " + fmt(r_start) +
                      " is at or below the domain floor " + fmt(space.domain_floor()));
  }
  if (mode == ConformalMode::DeclaredAsymptotics) {
    const auto& tail = space.declared_tail();
    if (!tail) {
      throw ConfigError("warp '" + space.describe() +
                        "' declares no asymptotic tail; use numeric-tail mode or declare one");
    }
    if (tail->shape == WarpTail::Shape::Exponential) return ConformalType::Hyperbolic;
    return tail->exponent <= 0.5 ? ConformalType::Parabolic : ConformalType::Hyperbolic;
  }

  // Dyadic windows [2^k, 2^{k+1}] from the first power of two >= r_start up to 2^30.
  const int k0 = std::max(0, int(std::ceil(std::log2(r_start))));
  const int windows = 30 - k0;
  if (windows < 6) return ConformalType::Inconclusive;
  try {
    auto inv_area = [&](double r) { return 1.0 / sphere_area(space, r); };
    const TailEstimate est = dyadic_tail(inv_area, std::ldexp(1.0, k0), true, windows);
    switch (est.verdict) {
      case TailEstimate::Verdict::Converges: return ConformalType::Hyperbolic;
      case TailEstimate::Verdict::Diverges: return ConformalType::Parabolic;
      case TailEstimate::Verdict::Inconclusive: return ConformalType::Inconclusive;
    }
  } catch (const DomainError&) {
    return ConformalType::Inconclusive;
  }
  return ConformalType::Inconclusive;
}

}  // namespace warpflow
