#include "warpflow/gaussian_oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "warpflow/errors.hpp"

namespace warpflow {

namespace gaussian {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

double m2(const GaussianConfig& cfg) { return cfg.mu * cfg.mu * cfg.r0 * cfg.r0; }

}  // namespace

void GaussianConfig::validate() const {
  if (!(mu > 0.0)) throw ConfigError("gaussian mu must be positive");
  if (!(r0 > 0.0)) throw ConfigError("gaussian r0 must be positive");
  if (!(area_fraction0 > 0.0 && area_fraction0 <= 0.5)) {
    throw ConfigError("initial area fraction must lie in (0, 1/2], got " + fmt(area_fraction0));
  }
}

std::optional<double> pole_time(const GaussianConfig& cfg) {
  const double m = m2(cfg);
  if (m >= 1.0) return std::nullopt;
  return std::log(1.0 / (1.0 - m)) / (2.0 * cfg.mu * cfg.mu);
}

double R_exact(const GaussianConfig& cfg, double t) {
  const double radicand = 1.0 + (m2(cfg) - 1.0) * std::exp(2.0 * cfg.mu * cfg.mu * t);
  if (radicand < 0.0) {
    throw RangeError("time " + fmt(t) + " is past the pole hit at t_pole = " + fmt(*pole_time(cfg)));
  }
  return std::sqrt(radicand) / cfg.mu;
}

double ttilde_exact(const GaussianConfig& cfg, double t) {
  if (t < 0.0) throw RangeError("time must be non-negative");
  const double m = m2(cfg);
  if (auto tp = pole_time(cfg); tp && t >= *tp) {
    throw RangeError("time " + fmt(t) + " is at or past the pole hit t_pole = " + fmt(*tp) +
                     " where ttilde diverges");
  }
  const double r2 = cfg.r0 * cfg.r0;
  const double decay = std::exp(-2.0 * cfg.mu * cfg.mu * t);
  return 0.5 * r2 * (std::log(m) - std::log(decay + (m - 1.0)));
}

std::optional<double> ttilde_limit(const GaussianConfig& cfg) {
  const double m = m2(cfg);
  if (m <= 1.0) return std::nullopt;
  return 0.5 * cfg.r0 * cfg.r0 * std::log(m / (m - 1.0));
}

double t_exact(const GaussianConfig& cfg, double ttilde) {
  if (ttilde < 0.0) throw RangeError("ttilde must be non-negative");
  if (auto lim = ttilde_limit(cfg); lim && ttilde >= *lim) {
    throw RangeError("ttilde " + fmt(ttilde) + " is at or beyond its limit " + fmt(*lim));
  }
  const double m = m2(cfg);
  const double decay = std::exp(-2.0 * ttilde / (cfg.r0 * cfg.r0));
  return -std::log(m * decay - (m - 1.0)) / (2.0 * cfg.mu * cfg.mu);
}

std::optional<double> ttilde_max_exact(const GaussianConfig& cfg) {
  if (cfg.area_fraction0 >= 0.5) return std::nullopt;
  // 2 pi r0^2 / (2 pi r0^2 - A0) with A0 = 4 pi r0^2 f
  return cfg.r0 * cfg.r0 * std::log(1.0 / (1.0 - 2.0 * cfg.area_fraction0));
}

double area_exact(const GaussianConfig& cfg, double ttilde) {
  if (ttilde < 0.0) throw RangeError("ttilde must be non-negative");
  const double half = 2.0 * kPi * cfg.r0 * cfg.r0;
  const double a0 = 4.0 * kPi * cfg.r0 * cfg.r0 * cfg.area_fraction0;
  if (auto tmax = ttilde_max_exact(cfg); tmax && ttilde > *tmax) {
    throw RangeError("ttilde " + fmt(ttilde) + " is past the collapse time " + fmt(*tmax));
  }
  return half - (half - a0) * std::exp(ttilde / (cfg.r0 * cfg.r0));
}

double threshold_fraction(const GaussianConfig& cfg) {
  const double m = m2(cfg);
  if (m <= 1.0) return 0.5;
  return 0.5 * (1.0 - std::sqrt((m - 1.0) / m));
}

OutcomeTag classify_gaussian_case(const GaussianConfig& cfg) {
  cfg.validate();
  const double mr = cfg.mu * cfg.r0;
  const double f = cfg.area_fraction0;
  if (mr > 1.0) {
    const double thr = threshold_fraction(cfg);
    if (f > thr) return OutcomeTag::EscapeHyperbolicCurveAtInfinity;
    if (f == thr) return OutcomeTag::EscapeHyperbolicPointAtInfinity;
    return OutcomeTag::CollapseSphericalRoundPoint;
  }
  if (mr == 1.0) {
    return f == 0.5 ? OutcomeTag::ConvergePsiMinimal : OutcomeTag::CollapseSphericalRoundPoint;
  }
  return f == 0.5 ? OutcomeTag::CollapsePole : OutcomeTag::CollapseSphericalRoundPoint;
}

}  // namespace gaussian
}  // namespace warpflow
