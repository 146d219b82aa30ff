#pragma once

#include <stdexcept>
#include <string>

namespace vstate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent grid / fold / vector sizes.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

/// Violated precondition on scalar parameters (radii ordering, mode range).
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// A boundary node lies on or outside the unit circle.
class DomainViolation : public Error {
public:
  using Error::Error;
};

/// Node collision or a sampled radius that is not strictly positive.
class DegenerateContour : public Error {
public:
  using Error::Error;
};

/// Doubly-connected boundaries cross or lose their containment.
class GeometryError : public Error {
public:
  using Error::Error;
};

/// The Newton matrix is numerically singular.
class SingularSystemError : public Error {
public:
  using Error::Error;
};

/// Requested bifurcation mode has no real eigenvalue.
class NoBifurcationError : public Error {
public:
  using Error::Error;
};

/// Continuation could not take its first step from the seed.
class SeedError : public Error {
public:
  using Error::Error;
};

/// A Lagrangian node left the disc during time stepping.
class InstabilityError : public Error {
public:
  InstabilityError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

inline bool is_geometry_failure(const std::exception& e) {
  return dynamic_cast<const DomainViolation*>(&e) != nullptr ||
         dynamic_cast<const DegenerateContour*>(&e) != nullptr ||
         dynamic_cast<const GeometryError*>(&e) != nullptr;
}

}  // namespace vstate
