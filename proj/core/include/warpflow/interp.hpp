#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace warpflow {

/// Natural cubic spline through strictly increasing knots.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> knots, std::vector<double> values);

  double operator()(double x) const;
  double derivative(double x) const;

  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }
  bool empty() const { return knots_.empty(); }

 private:
  std::size_t interval(double x) const;

  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> second_;  // second derivatives at the knots
};

/// Cubic Hermite interpolant on [x0, x1] from values and slopes at both ends.
double hermite(double x0, double x1, double y0, double y1, double d0, double d1, double x);
double hermite_slope(double x0, double x1, double y0, double y1, double d0, double d1, double x);

/// Quintic Hermite interpolant from values, slopes and second derivatives at both ends.
double hermite5(double x0, double x1, double y0, double y1, double d0, double d1, double c0,
                double c1, double x);

/// Fritsch-Carlson limiter: adjusts endpoint slopes so the Hermite cubic on the
/// interval stays monotone. Leaves slopes untouched when they already are and
/// returns whether it changed them.
bool limit_monotone(double x0, double x1, double y0, double y1, double& d0, double& d1);

/// Index i of the interval [xs[i], xs[i+1]] containing x; xs sorted ascending, size >= 2.
std::size_t locate(std::span<const double> xs, double x);

}  // namespace warpflow
