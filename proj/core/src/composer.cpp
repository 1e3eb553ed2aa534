#include "warpflow/composer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "warpflow/errors.hpp"

namespace warpflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

std::string fingerprint_of(const WarpedSpace& space, const DensitySpec& density,
                           const SphericalCurve& initial, double r0, const Budgets& b,
                           const ComposerOptions& o) {
  std::ostringstream os;
  os.precision(17);
  os << space.describe() << ";phi=" << density.radial.label << ";psi=" << density.angular.label
     << ";r0=" << r0 << ";N=" << initial.size() << ";t_budget=" << b.t_budget
     << ";ttilde_budget=" << b.ttilde_budget << ";max_steps=" << b.max_steps
     << ";cfl=" << o.sphere.cfl << ";reparam_every=" << o.sphere.reparam_every
     << ";snapshot_every=" << o.snapshot_every << ";rtol=" << o.radial.rtol;
  return os.str();
}

// Where the composed samples stop and where the sphere flow has to be driven.
struct Horizon {
  double composable = 0.0;  // ttilde range with a defined t
  double sphere = 0.0;      // ttilde the sphere flow is advanced to
  bool capped = false;      // the ttilde budget cut the range short
};

Horizon plan_horizon(const RadialTrajectory& traj, const Budgets& b, double tol) {
  const double end = traj.ttilde_end();
  const auto& lim = traj.ttilde_limit();
  Horizon h;
  double want = end;
  bool extend = false;
  if (std::holds_alternative<RootConvergence>(traj.terminal_event())) {
    want = kInf;
    extend = true;
  } else if (std::holds_alternative<Escape>(traj.terminal_event())) {
    if (lim.finite()) {
      want = lim.value * (1.0 + tol);
    } else if (lim.infinite()) {
      want = kInf;
    }
  }
  h.sphere = std::min(want, b.ttilde_budget);
  h.capped = want > b.ttilde_budget;
  h.composable = extend ? h.sphere : std::min(end, h.sphere);
  return h;
}

// t and R at a given ttilde, extrapolating past the end of a root-converged
// trajectory where R stays at its limit.
std::pair<double, double> time_and_radius(const WarpedSpace& space, const RadialTrajectory& traj,
                                          double ttilde) {
  if (ttilde <= traj.ttilde_end()) {
    const double t = invert_time_change(traj, ttilde);
    return {t, traj.radius_at(t)};
  }
  const double R = traj.radius_end();
  const double q = traj.w_r0() / space.w(R);
  return {traj.t_end() + (ttilde - traj.ttilde_end()) / (q * q), R};
}

ComposedSample compose_sample(const WarpedSpace& space, const DensitySpec& density,
                              const RadialTrajectory& traj, const SphereSnapshot& snap,
                              std::size_t index) {
  ComposedSample s;
  s.ttilde = snap.ttilde;
  std::tie(s.t, s.radius) = time_and_radius(space, traj, snap.ttilde);
  s.snapshot = index;
  const double scale = space.w(s.radius) / traj.w_r0();
  s.length = snap.diag.length * scale;
  s.weighted_length = std::exp(density.phi(s.radius)) * scale * snap.diag.weighted_length;
  s.max_abs_k_psi = snap.diag.max_abs_k_psi / scale;
  s.area_fraction = snap.diag.area_fraction;
  return s;
}

}  // namespace

AmbientPoint compose_point(const Vec3& sphere_point, double R) {
  if (R < 0.0) throw DomainError("ambient radius must be non-negative");
  return {R, sphere_point};
}

AmbientFlowRun simulate(const WarpedSpace& space, const DensitySpec& density,
                        const SphericalCurve& initial, double r0, const Budgets& budgets,
                        const ComposerOptions& opts) {
  if (!(r0 > space.domain_floor())) {
    throw ConfigError("r0 = " + fmt(r0) + " must exceed the domain floor " +
                      fmt(space.domain_floor()));
  }
  if (!(budgets.t_budget > 0.0) || !(budgets.ttilde_budget > 0.0) || budgets.max_steps == 0) {
    throw ConfigError("budgets must be positive");
  }
  if (!(opts.snapshot_every > 0.0) || opts.snapshot_every > budgets.ttilde_budget) {
    throw ConfigError("snapshot_every must lie in (0, ttilde_budget]");
  }
  if (!(opts.time_match_tol > 0.0 && opts.time_match_tol < 1.0)) {
    throw ConfigError("time_match_tol must lie in (0, 1)");
  }
  const double w0 = space.w(r0);
  if (std::abs(initial.rho() - w0) > 1e-9 * w0) {
    throw ConfigError("initial curve radius " + fmt(initial.rho()) + " does not match w(r0) = " +
                      fmt(w0));
  }
  if (!check_embedded(initial)) throw GeometryError("initial curve is not embedded");

  AmbientFlowRun run(integrate_radial(space, density, r0, budgets.t_budget, opts.radial));
  run.phi_extends_c1 = density.phi_extends_c1_to_zero();
  run.fingerprint = fingerprint_of(space, density, initial, r0, budgets, opts);
  const auto& traj = run.radial;

  const Horizon h = plan_horizon(traj, budgets, opts.time_match_tol);
  run.ttilde_horizon = h.sphere;

  std::vector<double> targets;
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * opts.snapshot_every;
    if (s >= h.sphere) break;
    targets.push_back(s);
  }
  for (double extra : {h.composable, h.sphere}) targets.push_back(extra);
  if (traj.ttilde_limit().finite()) targets.push_back(traj.ttilde_limit().value);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::remove_if(targets.begin(), targets.end(),
                               [&](double s) { return s > h.sphere; }),
                targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  SphereFlow flow(initial, density, opts.sphere);
  auto store = [&](double ttilde) {
    const std::size_t index = run.snapshots.size();
    run.snapshots.push_back({ttilde, flow.curve(), flow.diagnostics()});
    if (ttilde <= h.composable) {
      run.samples.push_back(compose_sample(space, density, traj, run.snapshots.back(), index));
    }
  };

  bool stationary = false;
  for (double target : targets) {
    if (stationary) {
      // psi-minimal curves do not move; hold the limit curve
      store(target);
      continue;
    }
    const std::size_t remaining = budgets.max_steps - std::min(budgets.max_steps, flow.steps());
    try {
      flow.advance_to(target, remaining);
    } catch (const StepError& e) {
      run.sphere_failed = true;
      run.sphere_stop = e.what();
    } catch (const DiscretizationError& e) {
      run.sphere_failed = true;
      run.sphere_stop = e.what();
    }
    if (run.sphere_failed) {
      store(flow.ttilde());
      break;
    }
    if (flow.terminated()) {
      store(flow.ttilde());
      if (std::holds_alternative<PsiMinimalConvergence>(flow.verdict())) {
        stationary = true;
        if (target > flow.ttilde()) store(target);
        continue;
      }
      run.sphere_stop = "verdict";
      break;
    }
    if (flow.ttilde() < target) {
      run.budget_exhausted = true;
      run.sphere_stop = "step budget";
      store(flow.ttilde());
      break;
    }
    store(target);
  }
  if (run.sphere_stop.empty()) run.sphere_stop = stationary ? "verdict" : "horizon";
  if (h.capped && !flow.terminated()) run.budget_exhausted = true;
  if (std::holds_alternative<Budget>(traj.terminal_event())) run.budget_exhausted = true;

  run.sphere_verdict = flow.verdict();
  run.sphere_verdict_ttilde = flow.verdict_ttilde();
  run.sphere_ttilde_reached = stationary ? run.snapshots.back().ttilde : flow.ttilde();
  run.sphere_steps = flow.steps();
  run.worst_weighted_length_increase = flow.worst_weighted_length_increase();
  run.embed_checks = flow.embed_checks();
  run.embed_failures = flow.embed_failures();
  return run;
}

BlowupTrajectory blowup_rescale(const AmbientFlowRun& run) {
  if (!std::holds_alternative<PoleHit>(run.radial.terminal_event())) {
    throw UsageError("blow-up rescaling needs a run ending at the pole, got " +
                     event_name(run.radial.terminal_event()));
  }
  BlowupTrajectory out;
  out.snapshots = run.snapshots;
  const auto& lim = run.radial.ttilde_limit();
  if (std::holds_alternative<PsiMinimalConvergence>(run.sphere_verdict)) {
    out.limit = BlowupLimit::PsiMinimal;
  } else if (std::holds_alternative<RoundPointCollapse>(run.sphere_verdict)) {
    out.limit = BlowupLimit::RoundPoint;
  } else if (lim.infinite() && run.phi_extends_c1) {
    out.limit = BlowupLimit::PsiMinimal;
  } else if (lim.finite() && std::holds_alternative<NoSingularity>(run.sphere_verdict) &&
             !run.sphere_failed) {
    out.limit = BlowupLimit::CurveAtTtildeLimit;
  }
  return out;
}

FlowOutcome classify_outcome(const AmbientFlowRun& run, const WarpedSpace& space,
                             const DensitySpec& density, const ComposerOptions& opts) {
  FlowOutcome out;
  const auto& traj = run.radial;
  const auto& event = traj.terminal_event();
  const auto& lim = traj.ttilde_limit();
  const double tol = opts.time_match_tol;

  out.evidence.push_back("radial terminal event: " + event_name(event));
  out.evidence.push_back("sphere verdict: " + verdict_name(run.sphere_verdict) + " at ttilde " +
                         fmt(run.sphere_verdict_ttilde));
  out.evidence.push_back(std::string("ttilde limit: ") +
                         (lim.finite() ? fmt(lim.value) : lim.infinite() ? "infinite" : "unknown"));
  out.evidence.push_back("sphere stop: " + run.sphere_stop);
  out.t_end = traj.t_end();
  out.radius = traj.radius_end();

  auto undetermined = [&](std::string reason) {
    out.tag = OutcomeTag::Undetermined;
    out.reason = std::move(reason);
    return out;
  };

  // (1) round point inside the ttilde range of the radial motion
  if (const auto* rp = std::get_if<RoundPointCollapse>(&run.sphere_verdict)) {
    const double ts = run.sphere_verdict_ttilde;
    double range = traj.ttilde_end();
    if (std::holds_alternative<RootConvergence>(event) || lim.infinite()) range = kInf;
    if (std::holds_alternative<Escape>(event) && lim.finite()) range = lim.value * (1.0 - tol);
    if (ts < range) {
      const auto [t, R] = time_and_radius(space, traj, std::min(ts, range));
      out.tag = OutcomeTag::CollapseSphericalRoundPoint;
      out.t_end = t;
      out.radius = R;
      out.location = compose_point(rp->location, R);
      return out;
    }
  }
  if (std::holds_alternative<CurvatureBlowup>(run.sphere_verdict)) {
    return undetermined("curvature blew up without a round shape");
  }
  if (run.sphere_failed) return undetermined("sphere flow stopped: " + run.sphere_stop);

  // (2) pole hit with a regular sphere flow
  if (const auto* pole = std::get_if<PoleHit>(&event)) {
    if (run.budget_exhausted) return undetermined("ttilde budget ran out before the pole");
    const auto blowup = blowup_rescale(run);
    if (!blowup.limit) return undetermined("blow-up limit at the pole is not determined");
    out.tag = OutcomeTag::CollapsePole;
    out.t_end = pole->t_hit;
    out.radius = 0.0;
    out.blowup_limit = blowup.limit;
    out.limit_curve = run.snapshots.back().curve;
    return out;
  }
  if (run.budget_exhausted) {
    return undetermined(std::holds_alternative<Budget>(event) ? "radial time budget exhausted"
                                                              : "sphere flow budget exhausted");
  }
  const bool psi_minimal = std::holds_alternative<PsiMinimalConvergence>(run.sphere_verdict);

  // (3) convergence to a B-minimal sphere
  if (const auto* root = std::get_if<RootConvergence>(&event)) {
    if (!psi_minimal) return undetermined("sphere flow did not settle on a psi-minimal curve");
    out.tag = OutcomeTag::ConvergePsiMinimal;
    out.r_infinity = root->r_star;
    out.radius = root->r_star;
    out.limit_curve = run.snapshots.back().curve;
    return out;
  }

  if (const auto* esc = std::get_if<Escape>(&event)) {
    const ConformalType type =
        space.declared_tail() ? classify_conformal_type(space, traj.r0(), opts.conformal_mode)
                              : classify_conformal_type(space, traj.r0(), ConformalMode::NumericTail);
    out.evidence.push_back("conformal type: " + to_string(type));

    // hypotheses on B, checked on the sampled range only
    double inf_b = kInf;
    double tail_sup = 0.0;
    const double r_lo = traj.r0();
    const double r_hi = esc->r_reached;
    for (int i = 0; i <= 256; ++i) {
      const double r = r_lo * std::pow(r_hi / r_lo, i / 256.0);
      const double b = eval_B(space, density, r);
      inf_b = std::min(inf_b, b);
      if (i >= 192) tail_sup = std::max(tail_sup, std::abs(b));
    }
    out.evidence.push_back("sampled inf B on [r0, r_reached]: " + fmt(inf_b) +
                           (std::isfinite(inf_b) ? " (finite)" : " (not finite)"));
    out.evidence.push_back("sampled sup |B| over the outer quarter: " + fmt(tail_sup) +
                           (tail_sup > 0.0 ? " (nonzero)" : " (zero)"));

    // (4) parabolic escape
    if (type == ConformalType::Parabolic) {
      if (!lim.infinite()) return undetermined("parabolic escape with ttilde not diverging");
      if (!psi_minimal) return undetermined("sphere flow did not settle on a psi-minimal curve");
      out.tag = OutcomeTag::EscapeParabolicPsiMinimalAtInfinity;
      out.limit_curve = run.snapshots.back().curve;
      return out;
    }
    // (5) hyperbolic escape
    if (type == ConformalType::Hyperbolic) {
      if (!lim.finite()) return undetermined("hyperbolic escape with ttilde not converging");
      const double T = lim.value;
      if (const auto* rp = std::get_if<RoundPointCollapse>(&run.sphere_verdict)) {
        if (std::abs(run.sphere_verdict_ttilde - T) <= tol * T) {
          out.tag = OutcomeTag::EscapeHyperbolicPointAtInfinity;
          out.radius = kInf;
          out.location = compose_point(rp->location, kInf);
          return out;
        }
      }
      // regular through T: take the snapshot stored at T
      const auto at_T = std::find_if(run.snapshots.begin(), run.snapshots.end(),
                                     [&](const SphereSnapshot& s) { return s.ttilde >= T; });
      if (at_T == run.snapshots.end()) return undetermined("sphere flow did not reach ttilde limit");
      out.tag = OutcomeTag::EscapeHyperbolicCurveAtInfinity;
      out.radius = kInf;
      out.limit_curve = at_T->curve;
      return out;
    }
    return undetermined("conformal type inconclusive");
  }
  return undetermined("no decision rule applies");
}

}  // namespace warpflow
