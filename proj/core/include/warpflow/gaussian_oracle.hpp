#pragma once

// Closed-form solutions for Euclidean space with the Gaussian radial density
// phi(r) = -mu^2 r^2 / 2 and psi = 0.

#include <optional>

#include "warpflow/outcome.hpp"

namespace warpflow::gaussian {

struct GaussianConfig {
  double mu = 1.0;
  double r0 = 1.0;
  double area_fraction0 = 0.5;  // in (0, 1/2]

  void validate() const;
};

/// R(t) = (1/mu) sqrt(1 + (mu^2 r0^2 - 1) e^{2 mu^2 t}).
double R_exact(const GaussianConfig& cfg, double t);

/// First time R reaches zero; nullopt unless mu r0 < 1.
std::optional<double> pole_time(const GaussianConfig& cfg);

double ttilde_exact(const GaussianConfig& cfg, double t);
double t_exact(const GaussianConfig& cfg, double ttilde);

/// lim_{t -> inf} ttilde(t) for mu r0 > 1; nullopt (infinite) otherwise.
std::optional<double> ttilde_limit(const GaussianConfig& cfg);

/// A(ttilde) = 2 pi r0^2 - (2 pi r0^2 - A0) e^{ttilde / r0^2}.
double area_exact(const GaussianConfig& cfg, double ttilde);

/// r0^2 ln(2 pi r0^2 / (2 pi r0^2 - A0)); nullopt (infinite) when the fraction is 1/2.
std::optional<double> ttilde_max_exact(const GaussianConfig& cfg);

/// (1/2)(1 - sqrt((mu^2 r0^2 - 1) / (mu^2 r0^2))) for mu r0 > 1; 1/2 otherwise.
double threshold_fraction(const GaussianConfig& cfg);

OutcomeTag classify_gaussian_case(const GaussianConfig& cfg);

}  // namespace warpflow::gaussian
