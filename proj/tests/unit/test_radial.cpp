#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "warpflow/errors.hpp"
#include "warpflow/gaussian_oracle.hpp"
#include "warpflow/radial.hpp"

using namespace warpflow;
using doctest::Approx;

namespace {

DensitySpec radial_only(RadialDensity phi) { return {std::move(phi), AngularDensity::zero()}; }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("collapsing log density: R = e^{-t}") {
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::log_power(-1.0, 1.0, 0.0)), 1.0, 3.0);
  for (double t : {1.0, 2.0, 3.0}) CHECK(rel(traj.radius_at(t), std::exp(-t)) <= 1e-8);
  CHECK(std::holds_alternative<Budget>(traj.terminal_event()));
}

TEST_CASE("expanding log density: R = sqrt(1 + 2t)") {
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::log_power(-2.0, 0.0, 0.0)), 1.0, 4.0);
  for (double t : {1.0, 4.0}) CHECK(rel(traj.radius_at(t), std::sqrt(1.0 + 2.0 * t)) <= 1e-8);
}

TEST_CASE("initial radius on the B-root stays put") {
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::gaussian(1.0)), 1.0, 10.0);
  const auto* root = std::get_if<RootConvergence>(&traj.terminal_event());
  REQUIRE(root != nullptr);
  CHECK(root->r_star == Approx(1.0).epsilon(1e-12));
  for (const auto& s : traj.samples()) CHECK(s.radius == Approx(1.0).epsilon(1e-14));
  CHECK(traj.ttilde_limit().infinite());
}

TEST_CASE("constant trajectory: ttilde equals t") {
  RadialOptions opts;
  opts.root_window = 0;
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::gaussian(1.0)), 1.0, 5.0, opts);
  CHECK(std::holds_alternative<Budget>(traj.terminal_event()));
  CHECK(time_change_of(traj, 5.0) == Approx(5.0).epsilon(1e-12));
  CHECK(invert_time_change(traj, 5.0) == Approx(5.0).epsilon(1e-12));
  CHECK(time_change_of(traj, 0.0) == 0.0);
  CHECK(invert_time_change(traj, 0.0) == 0.0);
}

TEST_CASE("Gaussian time change against the closed form") {
  const gaussian::GaussianConfig g{1.0, 2.0, 0.5};
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::gaussian(1.0)), 2.0, 5.0);
  CHECK(rel(time_change_of(traj, 1.0), 0.4871164887054914) <= 1e-7);
  CHECK(rel(invert_time_change(traj, 0.3), 0.40728251315827546) <= 1e-6);
  CHECK(rel(time_change_of(traj, 1.0), gaussian::ttilde_exact(g, 1.0)) <= 1e-7);
}

TEST_CASE("RK4 oracle agrees with the adaptive integrator") {
  const auto space = WarpedSpace::hyperbolic();
  const auto density = radial_only(RadialDensity::log_power(0.0, -3.0, 0.0));
  const double r0 = 1.0, t_end = 0.5;
  const auto traj = integrate_radial(space, density, r0, t_end);
  const auto [R, tt] = oracle::rk4_radial(
      [&](double r) { return eval_B(space, density, r); }, [&](double r) { return space.w(r); }, r0,
      t_end, 20000);
  CHECK(rel(traj.radius_at(t_end), R) <= 1e-9);
  CHECK(rel(time_change_of(traj, t_end), tt) <= 1e-9);
}

TEST_CASE("pole hit for the plain euclidean flow") {
  // R' = -1/R, so R^2 = r0^2 - 2t and the pole is reached at r0^2 / 2.
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::none()), 1.0, 10.0);
  const auto* hit = std::get_if<PoleHit>(&traj.terminal_event());
  REQUIRE(hit != nullptr);
  CHECK(hit->t_hit == Approx(0.5).epsilon(1e-10));
  CHECK(traj.ttilde_limit().infinite());
  for (std::size_t i = 1; i < traj.samples().size(); ++i) {
    CHECK(traj.samples()[i].radius < traj.samples()[i - 1].radius);
  }
}

TEST_CASE("Gaussian pole hit time and stability under halving pole_eps") {
  const auto density = radial_only(RadialDensity::gaussian(1.0));
  RadialOptions opts;
  const auto a = integrate_radial(WarpedSpace::euclidean(), density, 0.5, 10.0, opts);
  opts.pole_eps_rel *= 0.5;
  const auto b = integrate_radial(WarpedSpace::euclidean(), density, 0.5, 10.0, opts);
  const double ta = std::get<PoleHit>(a.terminal_event()).t_hit;
  const double tb = std::get<PoleHit>(b.terminal_event()).t_hit;
  CHECK(ta == Approx(0.14384103622589046).epsilon(1e-10));
  CHECK(std::abs(ta - tb) <= 1e-12);
  CHECK(b.ttilde_end() > a.ttilde_end());
}

TEST_CASE("Gaussian escape has a finite ttilde limit") {
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::gaussian(1.0)), 2.0, 100.0);
  CHECK(std::holds_alternative<Escape>(traj.terminal_event()));
  REQUIRE(traj.ttilde_limit().finite());
  CHECK(traj.ttilde_limit().value == Approx(0.57536414490356185).epsilon(1e-7));
}

TEST_CASE("samples are strictly increasing in t and ttilde") {
  for (double r0 : {0.5, 2.0}) {
    const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                       radial_only(RadialDensity::gaussian(1.0)), r0, 100.0);
    const auto& s = traj.samples();
    for (std::size_t i = 1; i < s.size(); ++i) {
      CHECK(s[i].t > s[i - 1].t);
      CHECK(s[i].ttilde > s[i - 1].ttilde);
    }
  }
}

TEST_CASE("barrier: B-roots confine the radius") {
  // B = coth r - 3/r: negative near the pole, positive far out, so its root attracts.
  const auto space = WarpedSpace::hyperbolic();
  const auto density = radial_only(RadialDensity::log_power(-3.0, 0.0, 0.0));
  const auto roots = find_B_roots(space, density, 0.1, 10.0, 1e-12);
  REQUIRE(roots.size() == 1);
  const double a = roots[0];
  for (double r0 : {0.9 * a, 1.1 * a}) {
    const auto traj = integrate_radial(space, density, r0, 50.0);
    for (const auto& s : traj.samples()) {
      if (r0 < a) CHECK(s.radius <= a);
      if (r0 > a) CHECK(s.radius >= a);
    }
    const auto* root = std::get_if<RootConvergence>(&traj.terminal_event());
    REQUIRE(root != nullptr);
    CHECK(root->r_star == Approx(a).epsilon(1e-10));
  }
  // The Gaussian root 1/mu repels: the radius leaves it on either side without crossing.
  const auto gauss = radial_only(RadialDensity::gaussian(1.0));
  for (double r0 : {0.7, 1.4}) {
    const auto traj = integrate_radial(WarpedSpace::euclidean(), gauss, r0, 50.0);
    for (const auto& s : traj.samples()) {
      if (r0 < 1.0) CHECK(s.radius < 1.0);
      if (r0 > 1.0) CHECK(s.radius > 1.0);
    }
  }
}

TEST_CASE("phi = -2 ln r: ttilde grows without bound") {
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::log_power(-2.0, 0.0, 0.0)), 1.0, 1e4);
  CHECK(time_change_of(traj, 1e4) > 4.0);
  CHECK(time_change_of(traj, 1e4) == Approx(0.5 * std::log(1.0 + 2e4)).epsilon(1e-6));
}

TEST_CASE("sqrt r warp with escaping density: ttilde converges") {
  const auto space = WarpedSpace::power(0.5, 1.0);
  const auto density = radial_only(RadialDensity::log_power(-0.5, -1.0, 0.0));
  RadialOptions opts;
  opts.r_max_rel = 1e20;
  const double r0 = 2.0;
  const auto traj = integrate_radial(space, density, r0, 30.0, opts);
  CHECK(rel(traj.radius_at(5.0), r0 * std::exp(5.0)) <= 1e-8);
  const double t20 = time_change_of(traj, 20.0);
  const double t30 = time_change_of(traj, 30.0);
  CHECK(t30 - t20 < 1e-6 * t20);
}

TEST_CASE("range errors") {
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::gaussian(1.0)), 2.0, 1.0);
  CHECK_THROWS_AS(time_change_of(traj, -0.1), RangeError);
  CHECK_THROWS_AS(time_change_of(traj, 1.5), RangeError);
  CHECK_THROWS_AS(invert_time_change(traj, 10.0), RangeError);
  CHECK_THROWS_AS(integrate_radial(WarpedSpace::euclidean(), radial_only(RadialDensity::none()), 0.0, 1.0),
                  DomainError);
  CHECK_THROWS_AS(integrate_radial(WarpedSpace::euclidean(), radial_only(RadialDensity::none()), 1.0, 0.0),
                  ConfigError);
}

TEST_CASE("round trip of the time change") {
  const auto traj = integrate_radial(WarpedSpace::euclidean(),
                                     radial_only(RadialDensity::gaussian(1.0)), 0.5, 10.0);
  // Up to R = r0/100; closer to the pole t is resolved only to its rounding
  // level while ttilde still grows, so ttilde -> t cannot be inverted to 1e-9.
  const double t_pole = *gaussian::pole_time({1.0, 0.5, 0.5});
  const double t_cut = t_pole - 0.5 * (0.005 * 0.005);  // R^2 ~ 2 (t_pole - t) near the pole
  const double x_max = time_change_of(traj, t_cut);
  for (int i = 1; i <= 50; ++i) {
    const double x = x_max * i / 50.0;
    CHECK(rel(time_change_of(traj, invert_time_change(traj, x)), x) <= 1e-9);
    const double t = t_pole * i / 51.0;
    CHECK(rel(invert_time_change(traj, time_change_of(traj, t)), t) <= 1e-9);
  }
}
