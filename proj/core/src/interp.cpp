#include "warpflow/interp.hpp"

#include <algorithm>
#include <cmath>

#include "warpflow/errors.hpp"

namespace warpflow {

CubicSpline::CubicSpline(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  const std::size_t n = knots_.size();
  if (n < 3 || values_.size() != n) {
    throw ConfigError("cubic spline needs at least 3 knots with matching values");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw ConfigError("spline knots must be strictly increasing");
  }

  // Tridiagonal solve for the natural spline (second derivative zero at both ends).
  second_.assign(n, 0.0);
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = knots_[i] - knots_[i - 1];
    const double h1 = knots_[i + 1] - knots_[i];
    const double a = h0 / 6.0;
    const double b = (h0 + h1) / 3.0;
    const double cc = h1 / 6.0;
    const double rhs = (values_[i + 1] - values_[i]) / h1 - (values_[i] - values_[i - 1]) / h0;
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (rhs - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    second_[i] = d[i] - c[i] * second_[i + 1];
  }
}

std::size_t CubicSpline::interval(double x) const { return locate(knots_, x); }

double CubicSpline::operator()(double x) const {
  const std::size_t i = interval(x);
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - x) / h;
  const double b = (x - knots_[i]) / h;
  return a * values_[i] + b * values_[i + 1] +
         ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - x) / h;
  const double b = (x - knots_[i]) / h;
  return (values_[i + 1] - values_[i]) / h -
         (3.0 * a * a - 1.0) / 6.0 * h * second_[i] +
         (3.0 * b * b - 1.0) / 6.0 * h * second_[i + 1];
}

double hermite(double x0, double x1, double y0, double y1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
}

double hermite5(double x0, double x1, double y0, double y1, double d0, double d1, double c0,
                double c1, double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double s4 = s3 * s;
  const double s5 = s4 * s;
  const double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
  const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
  const double h2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
  const double h3 = 0.5 * (s3 - 2 * s4 + s5);
  const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
  const double h5 = 10 * s3 - 15 * s4 + 6 * s5;
  return h0 * y0 + h1 * h * d0 + h2 * h * h * c0 + h3 * h * h * c1 + h4 * h * d1 + h5 * y1;
}

double hermite_slope(double x0, double x1, double y0, double y1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  const double dh00 = (6 * s2 - 6 * s) / h;
  const double dh10 = 3 * s2 - 4 * s + 1;
  const double dh01 = (-6 * s2 + 6 * s) / h;
  const double dh11 = 3 * s2 - 2 * s;
  return dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
}

bool limit_monotone(double x0, double x1, double y0, double y1, double& d0, double& d1) {
  const double secant = (y1 - y0) / (x1 - x0);
  if (secant == 0.0) {
    const bool changed = d0 != 0.0 || d1 != 0.0;
    d0 = 0.0;
    d1 = 0.0;
    return changed;
  }
  double a = d0 / secant;
  double b = d1 / secant;
  bool changed = false;
  if (a < 0.0) a = 0.0, changed = true;
  if (b < 0.0) b = 0.0, changed = true;
  const double r2 = a * a + b * b;
  if (r2 > 9.0) {
    const double tau = 3.0 / std::sqrt(r2);
    a *= tau;
    b *= tau;
    changed = true;
  }
  if (changed) {
    d0 = a * secant;
    d1 = b * secant;
  }
  return changed;
}

std::size_t locate(std::span<const double> xs, double x) {
  if (xs.size() < 2) throw RangeError("interpolation needs at least two samples");
  if (x < xs.front() || x > xs.back()) {
    throw DomainError("value outside tabulated range [" + std::to_string(xs.front()) + ", " +
                      std::to_string(xs.back()) + "]");
  }
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs.begin());
  if (i == 0) i = 1;
  if (i >= xs.size()) i = xs.size() - 1;
  return i - 1;
}

}  // namespace warpflow
