#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "warpflow/errors.hpp"
#include "warpflow/space.hpp"

using namespace warpflow;
using doctest::Approx;

namespace {

DensitySpec radial_only(RadialDensity phi) { return {std::move(phi), AngularDensity::zero()}; }

}  // namespace

TEST_CASE("eval_B on euclidean space") {
  const auto space = WarpedSpace::euclidean();
  CHECK(eval_B(space, radial_only(RadialDensity::gaussian(1.0)), 1.0) == Approx(0.0));
  CHECK(eval_B(space, radial_only(RadialDensity::gaussian(1.0)), 2.0) == Approx(-1.5));
  CHECK(eval_B(space, radial_only(RadialDensity::log_power(-2.0, 0.0, 0.0)), 3.0) ==
        Approx(-1.0 / 3.0));
  CHECK_THROWS_AS(eval_B(space, radial_only(RadialDensity::none()), 0.0), DomainError);
  CHECK_THROWS_AS(eval_B(space, radial_only(RadialDensity::none()), -1.0), DomainError);
}

TEST_CASE("sphere_area") {
  CHECK(sphere_area(WarpedSpace::euclidean(), 1.0) == Approx(4.0 * oracle::kPi));
  CHECK(sphere_area(WarpedSpace::power(0.5, 1.0), 4.0) == Approx(16.0 * oracle::kPi));
  CHECK(sphere_area(WarpedSpace::hyperbolic(), 1.0) == Approx(17.355387381771437).epsilon(1e-12));
}

TEST_CASE("weighted_circle_length") {
  const auto space = WarpedSpace::euclidean();
  CHECK(weighted_circle_length(space, radial_only(RadialDensity::none()), 1.0) ==
        Approx(2.0 * oracle::kPi));
  CHECK(weighted_circle_length(space, radial_only(RadialDensity::gaussian(1.0)), 1.0) ==
        Approx(3.8109445294603599).epsilon(1e-12));
  CHECK(weighted_circle_length(space, radial_only(RadialDensity::log_power(-2.0, 0.0, 0.0)), 2.0) ==
        Approx(oracle::kPi));
}

TEST_CASE("find_B_roots") {
  const auto space = WarpedSpace::euclidean();
  const auto roots = find_B_roots(space, radial_only(RadialDensity::gaussian(2.0)), 0.1, 5.0, 1e-12);
  REQUIRE(roots.size() == 1);
  CHECK(roots[0] == Approx(0.5).epsilon(1e-10));
  CHECK(find_B_roots(space, radial_only(RadialDensity::none()), 0.1, 5.0, 1e-12).empty());
  CHECK(find_B_roots(space, radial_only(RadialDensity::log_power(-2.0, 0.0, 0.0)), 0.1, 5.0, 1e-12)
            .empty());
}

TEST_CASE("find_B_roots brackets sign changes") {
  const auto space = WarpedSpace::hyperbolic();
  const auto density = radial_only(RadialDensity::log_power(0.0, -1.5, 0.0));
  const double tol = 1e-10;
  const auto roots = find_B_roots(space, density, 0.05, 6.0, tol);
  REQUIRE_FALSE(roots.empty());
  for (double r : roots) {
    CHECK(std::abs(eval_B(space, density, r)) <= 1e-6);
    const double d = 10.0 * tol;
    CHECK(std::signbit(eval_B(space, density, r - d)) != std::signbit(eval_B(space, density, r + d)));
  }
}

TEST_CASE("conformal type, numeric tail") {
  CHECK(classify_conformal_type(WarpedSpace::euclidean(), 1.0, ConformalMode::NumericTail) ==
        ConformalType::Hyperbolic);
  CHECK(classify_conformal_type(WarpedSpace::power(0.5, 1.0), 1.0, ConformalMode::NumericTail) ==
        ConformalType::Parabolic);
  CHECK(classify_conformal_type(WarpedSpace::hyperbolic(), 1.0, ConformalMode::NumericTail) ==
        ConformalType::Hyperbolic);
}

TEST_CASE("conformal type, declared asymptotics") {
  CHECK(classify_conformal_type(WarpedSpace::euclidean(), 1.0, ConformalMode::DeclaredAsymptotics) ==
        ConformalType::Hyperbolic);
  CHECK(classify_conformal_type(WarpedSpace::power(0.5, 1.0), 1.0,
                                ConformalMode::DeclaredAsymptotics) == ConformalType::Parabolic);
  CHECK(classify_conformal_type(WarpedSpace::power(0.75, 1.0), 1.0,
                                ConformalMode::DeclaredAsymptotics) == ConformalType::Hyperbolic);
  std::vector<double> r, w;
  for (int i = 1; i <= 20; ++i) {
    r.push_back(0.1 * i);
    w.push_back(0.1 * i);
  }
  const auto table = WarpedSpace::tabulated(r, w, std::nullopt);
  CHECK_THROWS_AS(classify_conformal_type(table, 1.0, ConformalMode::DeclaredAsymptotics),
                  ConfigError);
}

TEST_CASE("presets that reach the pole have w(r)/r -> 1") {
  for (const auto& space : {WarpedSpace::euclidean(), WarpedSpace::hyperbolic(),
                            WarpedSpace::power(0.5, 1.0), WarpedSpace::power(2.0, 0.5)}) {
    CHECK(space.w(1e-6) / 1e-6 == Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("power warp is r^p beyond the glue radius") {
  const auto space = WarpedSpace::power(0.5, 1.0);
  CHECK(space.w(4.0) == Approx(2.0).epsilon(1e-14));
  CHECK(space.w_prime(4.0) == Approx(0.25).epsilon(1e-14));
  for (double r : {0.1, 0.5, 0.9, 1.5}) {
    CHECK(space.w_prime(r) ==
          Approx(oracle::central_difference([&](double x) { return space.w(x); }, r, 1e-6))
              .epsilon(1e-6));
    CHECK(space.w(r) > 0.0);
  }
}

TEST_CASE("tabulated warp respects its knot range") {
  std::vector<double> r, w;
  for (int i = 1; i <= 40; ++i) {
    r.push_back(0.1 * i);
    w.push_back(std::sinh(0.1 * i));
  }
  const auto space = WarpedSpace::tabulated(r, w, WarpTail{WarpTail::Shape::Exponential, 1.0});
  CHECK(space.domain_floor() == Approx(0.1));
  CHECK(space.w(2.05) == Approx(std::sinh(2.05)).epsilon(1e-4));
  CHECK(space.w_prime(2.05) == Approx(std::cosh(2.05)).epsilon(1e-3));
  CHECK_THROWS_AS(space.w(0.05), DomainError);
  CHECK_THROWS_AS(space.w(4.5), DomainError);
}

TEST_CASE("phi_prime matches a central difference of phi") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pick(0.1, 10.0);
  for (const auto& phi : {RadialDensity::gaussian(1.3), RadialDensity::log_power(-0.5, -1.0, 0.2),
                          RadialDensity::log_power(-2.0, 0.0, 0.0), RadialDensity::none()}) {
    for (int i = 0; i < 10; ++i) {
      const double r = pick(rng);
      const double fd = oracle::central_difference(phi.phi, r, 1e-5 * r);
      CHECK(phi.phi_prime(r) == Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("psi gradient is tangent to the sphere") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::vector<double> table(9 * 16);
  for (std::size_t i = 0; i < table.size(); ++i) table[i] = std::sin(0.3 * double(i));
  for (const auto& psi : {AngularDensity::z_squared(1.0), AngularDensity::constant(2.0),
                          AngularDensity::latlon_table(9, 16, table)}) {
    for (int i = 0; i < 50; ++i) {
      const Vec3 p = Vec3(g(rng), g(rng), g(rng)).normalized();
      const Vec3 grad = psi.psi_grad(p);
      CHECK(std::abs(grad.dot(p)) <= 1e-12 * grad.norm() + 1e-15);
    }
  }
}

TEST_CASE("derivative of ln weighted circle length is B") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pick(0.2, 8.0);
  const std::vector<WarpedSpace> spaces{WarpedSpace::euclidean(), WarpedSpace::hyperbolic(),
                                        WarpedSpace::power(0.5, 1.0)};
  const std::vector<RadialDensity> phis{RadialDensity::gaussian(1.0),
                                        RadialDensity::log_power(-0.5, -1.0, 0.0),
                                        RadialDensity::log_power(-2.0, 0.0, 0.0)};
  for (const auto& space : spaces) {
    for (const auto& phi : phis) {
      const auto density = radial_only(phi);
      for (int i = 0; i < 100; ++i) {
        const double r = pick(rng);
        auto lnL = [&](double x) { return std::log(weighted_circle_length(space, density, x)); };
        const double fd = oracle::central_difference(lnL, r, 1e-5);
        const double b = eval_B(space, density, r);
        CHECK(std::abs(fd - b) <= 1e-6 * std::max(1.0, std::abs(b)));
      }
    }
  }
}

TEST_CASE("sphere area is the squared plain circle length over pi") {
  for (const auto& space : {WarpedSpace::euclidean(), WarpedSpace::hyperbolic()}) {
    for (double r : {0.3, 1.0, 2.7}) {
      const double L = weighted_circle_length(space, radial_only(RadialDensity::none()), r);
      CHECK(sphere_area(space, r) == Approx(L * L / oracle::kPi).epsilon(1e-12));
    }
  }
}

TEST_CASE("dyadic tail test") {
  const auto conv = dyadic_tail([](double r) { return 1.0 / (r * r); }, 1.0, true);
  CHECK(conv.verdict == TailEstimate::Verdict::Converges);
  CHECK(conv.partial_sum == Approx(1.0).epsilon(1e-6));
  CHECK(dyadic_tail([](double r) { return 1.0 / r; }, 1.0, true).verdict ==
        TailEstimate::Verdict::Diverges);
  CHECK(dyadic_tail([](double r) { return 1.0 / r; }, 1.0, false).verdict ==
        TailEstimate::Verdict::Diverges);
  CHECK(dyadic_tail([](double r) { return std::sqrt(r); }, 1.0, false).verdict ==
        TailEstimate::Verdict::Converges);
}
