#pragma once

#include <stdexcept>
#include <string>

namespace warpflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A radius at or below the domain floor of a warping or density function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A time or parameter outside the range covered by stored data.
class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class DiscretizationError : public Error {
 public:
  using Error::Error;
};

class StepError : public Error {
 public:
  StepError(const std::string& what, double admissible_dt)
      : Error(what), admissible_dt(admissible_dt) {}
  double admissible_dt;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

/// The radial integrator could not continue; carries the last accepted state.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double t, double radius, double ttilde)
      : Error(what), t(t), radius(radius), ttilde(ttilde) {}
  double t;
  double radius;
  double ttilde;
};

}  // namespace warpflow
