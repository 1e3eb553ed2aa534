#include "warpflow/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "warpflow/errors.hpp"
#include "warpflow/interp.hpp"

namespace warpflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

using State = std::array<double, 2>;  // (R, ttilde)

// Below this fraction of r0 the approach to the pole switches to ln R as parameter.
constexpr double kPoleSwitch = 1e-3;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

class RadialSystem {
 public:
  RadialSystem(const WarpedSpace& space, const DensitySpec& density, double r0)
      : space_(space), density_(density), w0_(space.w(r0)) {}

  // Right-hand side; nullopt when R leaves the domain.
  std::optional<State> rhs(double radius) const {
    if (!std::isfinite(radius) || radius <= space_.domain_floor() ||
        radius > space_.domain_ceiling()) {
      return std::nullopt;
    }
    const double w = space_.w(radius);
    const double B = space_.w_prime(radius) / w + density_.phi_prime(radius);
    const double ratio = w0_ / w;
    State out{-B, ratio * ratio};
    if (!std::isfinite(out[0]) || !std::isfinite(out[1])) return std::nullopt;
    return out;
  }

  // Second derivatives (R'', ttilde'') along the flow; B' by central difference.
  State accel(double radius, const State& rate) const {
    const double room = radius - space_.domain_floor();
    const double d = std::min(1e-5 * radius, 0.5 * room);
    const double Bp = (B(radius + d) - B(radius - d)) / (2.0 * d);
    const double log_w_prime = space_.w_prime(radius) / space_.w(radius);
    State out{-Bp * rate[0], -2.0 * rate[1] * log_w_prime * rate[0]};
    if (!std::isfinite(out[0]) || !std::isfinite(out[1])) return {0.0, 0.0};
    return out;
  }

  double B(double radius) const { return eval_B(space_, density_, radius); }
  double w0() const { return w0_; }

 private:
  const WarpedSpace& space_;
  const DensitySpec& density_;
  double w0_;
};

struct Trial {
  State y;
  double err;  // scaled RMS error norm
};

std::optional<Trial> dopri_step(const RadialSystem& sys, const State& y, const State& k1, double h,
                                double rtol, double atol) {
  auto stage = [&](double dR) { return sys.rhs(y[0] + h * dR); };
  auto k2 = stage(a21 * k1[0]);
  if (!k2) return std::nullopt;
  auto k3 = stage(a31 * k1[0] + a32 * (*k2)[0]);
  if (!k3) return std::nullopt;
  auto k4 = stage(a41 * k1[0] + a42 * (*k2)[0] + a43 * (*k3)[0]);
  if (!k4) return std::nullopt;
  auto k5 = stage(a51 * k1[0] + a52 * (*k2)[0] + a53 * (*k3)[0] + a54 * (*k4)[0]);
  if (!k5) return std::nullopt;
  auto k6 = stage(a61 * k1[0] + a62 * (*k2)[0] + a63 * (*k3)[0] + a64 * (*k4)[0] + a65 * (*k5)[0]);
  if (!k6) return std::nullopt;

  State yn{};
  for (int c = 0; c < 2; ++c) {
    yn[c] = y[c] + h * (b1 * k1[c] + b3 * (*k3)[c] + b4 * (*k4)[c] + b5 * (*k5)[c] + b6 * (*k6)[c]);
  }
  auto k7 = sys.rhs(yn[0]);
  if (!k7) return std::nullopt;

  double sum = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double e = h * (e1 * k1[c] + e3 * (*k3)[c] + e4 * (*k4)[c] + e5 * (*k5)[c] +
                          e6 * (*k6)[c] + e7 * (*k7)[c]);
    const double scale = atol + rtol * std::max(std::abs(y[c]), std::abs(yn[c]));
    sum += (e / scale) * (e / scale);
  }
  return Trial{yn, std::sqrt(sum / 2.0)};
}

// Hermite segment on [x0, x1]. Quintic where the limiter leaves the cubic
// slopes alone, limited monotone cubic otherwise.
struct Segment {
  double x0, x1, y0, y1, d0, d1, c0, c1;
  bool quintic;
};

Segment make_segment(double x0, double x1, double y0, double y1, double d0, double d1, double c0,
                     double c1) {
  double l0 = d0, l1 = d1;
  const bool quintic = !limit_monotone(x0, x1, y0, y1, l0, l1);
  return {x0, x1, y0, y1, l0, l1, c0, c1, quintic};
}

double eval(const Segment& s, double x) {
  if (s.quintic) return hermite5(s.x0, s.x1, s.y0, s.y1, s.d0, s.d1, s.c0, s.c1, x);
  return hermite(s.x0, s.x1, s.y0, s.y1, s.d0, s.d1, x);
}

TtildeLimit estimate_limit(const RadialSystem& sys, const RadialEvent& event, double radius_end,
                           double ttilde_end) {
  TtildeLimit out;
  if (std::holds_alternative<RootConvergence>(event)) {
    out.kind = TtildeLimit::Kind::Infinite;
    return out;
  }
  if (std::holds_alternative<Budget>(event)) return out;

  const bool outward = std::holds_alternative<Escape>(event);
  // dttilde/dr along the remaining radial motion: (w0/w)^2 / |B|.
  auto integrand = [&](double r) {
    auto f = sys.rhs(r);
    if (!f) throw DomainError("tail radius outside domain");
    return (*f)[1] / std::abs((*f)[0]);
  };
  try {
    const TailEstimate est = dyadic_tail(integrand, radius_end, outward, 30);
    switch (est.verdict) {
      case TailEstimate::Verdict::Converges:
        out.kind = TtildeLimit::Kind::Finite;
        out.value = ttilde_end + est.partial_sum;
        break;
      case TailEstimate::Verdict::Diverges:
        out.kind = TtildeLimit::Kind::Infinite;
        break;
      case TailEstimate::Verdict::Inconclusive:
        break;
    }
  } catch (const DomainError&) {
  }
  return out;
}

// Final approach to the pole, parametrized by s = ln R. Both dt/ds = -R/B and
// dttilde/ds = -R (w0/w)^2 / B stay bounded as R -> 0 when B ~ 1/R, so the
// cutoff is reached without resolving t below its rounding level.
struct PoleApproach {
  std::vector<std::pair<double, State>> points;  // (R, (t, ttilde)) after each step
};

PoleApproach approach_pole(const RadialSystem& sys, double R_start, double t0, double tt0,
                           double pole_eps, const RadialOptions& opts) {
  auto f = [&](double s) -> State {
    const double R = std::exp(s);
    auto g = sys.rhs(R);
    if (!g || !((*g)[0] < 0.0) || R * -(*g)[0] < 0.25) {
      throw IntegrationError("radial motion stalls near the pole at R=" + fmt(R), t0, R, tt0);
    }
    const double dsdt = (*g)[0] / R;  // ds/dt = -B/R
    return {1.0 / dsdt, (*g)[1] / dsdt};
  };
  PoleApproach out;
  const double s_end = std::log(pole_eps);
  double s = std::log(R_start);
  State y{t0, tt0};
  double h = -opts.max_step_scale;
  State k1 = f(s);
  while (s > s_end) {
    if (s + h < s_end) h = s_end - s;
    const State k3 = f(s + 0.3 * h), k4 = f(s + 0.8 * h), k5 = f(s + 8.0 / 9.0 * h),
                k6 = f(s + h);
    State yn{};
    double sum = 0.0;
    for (int c = 0; c < 2; ++c) {
      yn[c] = y[c] + h * (b1 * k1[c] + b3 * k3[c] + b4 * k4[c] + b5 * k5[c] + b6 * k6[c]);
      const double e = h * (e1 * k1[c] + e3 * k3[c] + e4 * k4[c] + e5 * k5[c] + (e6 + e7) * k6[c]);
      const double scale = opts.atol + opts.rtol * std::max(std::abs(y[c]), std::abs(yn[c]));
      sum += (e / scale) * (e / scale);
    }
    const double err = std::sqrt(sum / 2.0);
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (std::abs(h) < 1e-12) {
        throw IntegrationError("step size underflow approaching the pole", y[0], std::exp(s), y[1]);
      }
      continue;
    }
    s = (s + h < s_end || std::abs(s + h - s_end) < 1e-15) ? s_end : s + h;
    y = yn;
    k1 = k6;
    out.points.emplace_back(s == s_end ? pole_eps : std::exp(s), y);
    h *= err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
    h = std::max(h, -opts.max_step_scale);
  }
  return out;
}

}  // namespace

std::string event_name(const RadialEvent& event) {
  return std::visit(
      [](const auto& e) -> std::string {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PoleHit>) return "PoleHit";
        if constexpr (std::is_same_v<T, RootConvergence>) return "RootConvergence";
        if constexpr (std::is_same_v<T, Escape>) return "Escape";
        return "Budget";
      },
      event);
}

RadialTrajectory::RadialTrajectory(std::vector<RadialSample> samples, RadialEvent event, double r0,
                                   double w_r0, TtildeLimit limit)
    : samples_(std::move(samples)), event_(event), r0_(r0), w_r0_(w_r0), limit_(limit) {
  if (samples_.empty()) throw UsageError("radial trajectory needs at least one sample");
  times_.reserve(samples_.size());
  ttildes_.reserve(samples_.size());
  for (const auto& s : samples_) {
    times_.push_back(s.t);
    ttildes_.push_back(s.ttilde);
  }
}

double RadialTrajectory::radius_at(double t) const {
  if (!(t >= 0.0 && t <= t_end())) {
    throw RangeError("time " + fmt(t) + " outside the sampled range [0, " + fmt(t_end()) + "]");
  }
  if (samples_.size() == 1) return samples_.front().radius;
  const std::size_t i = locate(times_, t);
  const auto& a = samples_[i];
  const auto& b = samples_[i + 1];
  return eval(make_segment(a.t, b.t, a.radius, b.radius, a.radius_rate, b.radius_rate,
                           a.radius_accel, b.radius_accel),
              t);
}

double time_change_of(const RadialTrajectory& traj, double t) {
  if (!(t >= 0.0 && t <= traj.t_end())) {
    throw RangeError("time " + fmt(t) + " outside the sampled range [0, " + fmt(traj.t_end()) + "]");
  }
  if (t == 0.0) return 0.0;
  const auto& s = traj.samples_;
  const std::size_t i = locate(traj.times_, t);
  return eval(make_segment(s[i].t, s[i + 1].t, s[i].ttilde, s[i + 1].ttilde, s[i].ttilde_rate,
                           s[i + 1].ttilde_rate, s[i].ttilde_accel, s[i + 1].ttilde_accel),
              t);
}

double invert_time_change(const RadialTrajectory& traj, double ttilde) {
  if (!(ttilde >= 0.0 && ttilde <= traj.ttilde_end())) {
    std::string limit;
    switch (traj.ttilde_limit().kind) {
      case TtildeLimit::Kind::Finite: limit = fmt(traj.ttilde_limit().value); break;
      case TtildeLimit::Kind::Infinite: limit = "+inf"; break;
      case TtildeLimit::Kind::Unknown: limit = "unknown"; break;
    }
    throw RangeError("ttilde " + fmt(ttilde) + " beyond the accumulated range [0, " +
                     fmt(traj.ttilde_end()) + "] (ttilde limit " + limit + ")");
  }
  if (ttilde == 0.0) return 0.0;
  const auto& s = traj.samples_;
  const std::size_t i = locate(traj.ttildes_, ttilde);
  const Segment seg = make_segment(s[i].t, s[i + 1].t, s[i].ttilde, s[i + 1].ttilde,
                                   s[i].ttilde_rate, s[i + 1].ttilde_rate, s[i].ttilde_accel,
                                   s[i + 1].ttilde_accel);
  // Bisection on t; the segment values bracket ttilde.
  double lo = seg.x0, hi = seg.x1;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (eval(seg, mid) < ttilde) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double elo = std::abs(eval(seg, lo) - ttilde);
  const double ehi = std::abs(eval(seg, hi) - ttilde);
  return elo <= ehi ? lo : hi;
}

RadialTrajectory integrate_radial(const WarpedSpace& space, const DensitySpec& density, double r0,
                                  double t_budget, const RadialOptions& opts) {
  if (!(r0 > space.domain_floor())) {
    throw DomainError("initial radius " + fmt(r0) + " is at or below the domain floor " +
                      fmt(space.domain_floor()));
  }
  if (!(t_budget > 0.0)) throw ConfigError("t_budget must be positive");

  const RadialSystem sys(space, density, r0);
  const double pole_eps = opts.pole_eps_rel * r0;
  const double root_eps = opts.root_eps_rel * r0;
  const double r_max = opts.r_max_rel * r0;

  auto make_sample = [&](double t, const State& y) {
    auto f = sys.rhs(y[0]);
    const State a = sys.accel(y[0], *f);
    return RadialSample{t, y[0], y[1], (*f)[0], (*f)[1], a[0], a[1]};
  };

  std::vector<RadialSample> samples;
  State y{r0, 0.0};
  double t = 0.0;
  samples.push_back(make_sample(t, y));

  double h = std::min(opts.initial_step, opts.max_step);
  double prev_abs_B = std::abs(sys.B(r0));
  int non_increasing = 0;

  auto finish = [&](RadialEvent event) {
    const TtildeLimit limit = estimate_limit(sys, event, samples.back().radius, samples.back().ttilde);
    return RadialTrajectory(std::move(samples), event, r0, sys.w0(), limit);
  };

  while (true) {
    if (t >= t_budget) return finish(Budget{t});
    const double scale_cap = opts.max_step_scale * y[0] / std::abs(sys.B(y[0]));
    h = std::min({h, opts.max_step, scale_cap, t_budget - t});
    const double h_min = 1e-14 * std::max(1.0, std::abs(t));
    if (h < h_min) {
      throw IntegrationError("step size underflow at t=" + fmt(t) + ", R=" + fmt(y[0]) +
                                 " (dynamics near the pole faster than resolvable)",
                             t, y[0], y[1]);
    }

    const State k1 = *sys.rhs(y[0]);
    const auto trial = dopri_step(sys, y, k1, h, opts.rtol, opts.atol);
    if (!trial) {
      h *= 0.25;
      continue;
    }
    if (trial->err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(trial->err, -0.2));
      continue;
    }

    const double r_new = trial->y[0];
    if (r_new <= pole_eps || r_new >= r_max) {
      const bool toward_pole = r_new <= pole_eps;
      // Bisect the step length for the crossing of the cutoff radius.
      auto crossed = [&](double hh, State& out) {
        auto tr = dopri_step(sys, y, k1, hh, opts.rtol, opts.atol);
        if (!tr) return true;
        out = tr->y;
        return toward_pole ? tr->y[0] <= pole_eps : tr->y[0] >= r_max;
      };
      double lo = 0.0, hi = h;
      State y_lo = y;
      for (int it = 0; it < 200; ++it) {
        if (hi - lo <= opts.rtol * std::max(t + hi, std::numeric_limits<double>::min())) break;
        const double mid = 0.5 * (lo + hi);
        State ym{};
        if (crossed(mid, ym)) {
          hi = mid;
        } else {
          lo = mid;
          y_lo = ym;
        }
      }
      if (lo > 0.0) {
        samples.push_back(make_sample(t + lo, y_lo));
      }
      const double t_cross = t + 0.5 * (lo + hi);
      if (toward_pole) return finish(PoleHit{t_cross});
      return finish(Escape{samples.back().radius});
    }

    t += h;
    y = trial->y;
    samples.push_back(make_sample(t, y));

    if (y[0] <= kPoleSwitch * r0 && y[0] * sys.B(y[0]) >= 0.5) {
      const auto approach = approach_pole(sys, y[0], t, y[1], pole_eps, opts);
      for (const auto& [R, ty] : approach.points) {
        if (ty[0] > t_budget) return finish(Budget{samples.back().t});
        RadialSample sample = make_sample(ty[0], {R, ty[1]});
        // t saturates at its rounding level; keep times strictly increasing
        if (sample.t <= samples.back().t) {
          if (samples.size() < 2) continue;
          sample.t = samples.back().t;
          samples.back() = sample;
        } else {
          samples.push_back(sample);
        }
      }
      return finish(PoleHit{samples.back().t});
    }

    const double abs_B = std::abs(sys.B(y[0]));
    non_increasing = abs_B <= prev_abs_B ? non_increasing + 1 : 0;
    prev_abs_B = abs_B;
    if (opts.root_window > 0 && non_increasing >= opts.root_window) {
      const double R = y[0];
      const double lo = std::max(R - root_eps, 0.5 * (R + space.domain_floor()));
      const double hi = R + root_eps;
      const double b_mid = sys.B(R);
      if (b_mid == 0.0) return finish(RootConvergence{R});
      const double b_lo = sys.B(lo);
      const double b_hi = sys.B(hi);
      if (b_lo == 0.0) return finish(RootConvergence{lo});
      if (b_hi == 0.0) return finish(RootConvergence{hi});
      if (std::signbit(b_lo) != std::signbit(b_hi)) {
        const auto roots = find_B_roots(space, density, lo, hi, 1e-14 * std::max(1.0, R));
        double r_star = R;
        if (!roots.empty()) {
          r_star = *std::min_element(roots.begin(), roots.end(), [R](double a, double b) {
            return std::abs(a - R) < std::abs(b - R);
          });
        }
        return finish(RootConvergence{r_star});
      }
    }

    const double factor = trial->err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(trial->err, -0.2));
    h *= factor;
  }
}

}  // namespace warpflow
