#pragma once

// Radius ODE R'(t) = -B(R(t)) with the time change
// ttilde(t) = int_0^t (w(r0)/w(R))^2 dt carried as a second state component.

#include <string>
#include <variant>
#include <vector>

#include "warpflow/space.hpp"

namespace warpflow {

struct RadialOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  double pole_eps_rel = 1e-8;   // pole cutoff, relative to r0
  double root_eps_rel = 1e-6;   // proximity to a B-root, relative to r0
  double r_max_rel = 1e6;       // escape radius, relative to r0
  double max_step = 1e-2;       // keeps the Hermite sample interpolation accurate
  double max_step_scale = 0.02; // step cap relative to the local time scale R/|B(R)|
  double initial_step = 1e-4;
  int root_window = 10;         // accepted steps with |B| non-increasing; <= 0 disables
};

struct RadialSample {
  double t = 0.0;
  double radius = 0.0;
  double ttilde = 0.0;
  double radius_rate = 0.0;  // -B(R)
  double ttilde_rate = 0.0;  // (w(r0)/w(R))^2
  double radius_accel = 0.0;  // B'(R) B(R)
  double ttilde_accel = 0.0;  // d/dt of ttilde_rate
};

struct PoleHit {
  double t_hit = 0.0;
};
struct RootConvergence {
  double r_star = 0.0;
};
struct Escape {
  double r_reached = 0.0;
};
struct Budget {
  double t_end = 0.0;
};

using RadialEvent = std::variant<PoleHit, RootConvergence, Escape, Budget>;

std::string event_name(const RadialEvent& event);

/// Limit of ttilde as t approaches the end of the radial motion.
struct TtildeLimit {
  enum class Kind { Finite, Infinite, Unknown };
  Kind kind = Kind::Unknown;
  double value = 0.0;  // meaningful when Finite

  bool finite() const { return kind == Kind::Finite; }
  bool infinite() const { return kind == Kind::Infinite; }
};

class RadialTrajectory {
 public:
  RadialTrajectory(std::vector<RadialSample> samples, RadialEvent event, double r0, double w_r0,
                   TtildeLimit limit);

  const std::vector<RadialSample>& samples() const { return samples_; }
  const RadialEvent& terminal_event() const { return event_; }
  double r0() const { return r0_; }
  double w_r0() const { return w_r0_; }
  const TtildeLimit& ttilde_limit() const { return limit_; }

  double t_end() const { return samples_.back().t; }
  double ttilde_end() const { return samples_.back().ttilde; }
  double radius_end() const { return samples_.back().radius; }

  /// R(t) by quintic Hermite interpolation with the ODE slopes and second
  /// derivatives; monotone cubic on intervals too coarse for that.
  double radius_at(double t) const;

 private:
  std::vector<RadialSample> samples_;
  std::vector<double> times_;
  std::vector<double> ttildes_;
  RadialEvent event_;
  double r0_;
  double w_r0_;
  TtildeLimit limit_;

  friend double time_change_of(const RadialTrajectory&, double);
  friend double invert_time_change(const RadialTrajectory&, double);
};

/// Adaptive Dormand-Prince 5(4) integration of the radius and the time change,
/// stopping at the first of pole hit, convergence to a B-root, escape or budget.
RadialTrajectory integrate_radial(const WarpedSpace& space, const DensitySpec& density, double r0,
                                  double t_budget, const RadialOptions& opts = {});

/// ttilde(t), Hermite interpolation of the accumulated integral as for radius_at.
double time_change_of(const RadialTrajectory& traj, double t);

/// t(ttilde), the exact inverse of the interpolant used by time_change_of.
double invert_time_change(const RadialTrajectory& traj, double ttilde);

}  // namespace warpflow
