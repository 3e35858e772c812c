#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The speed is undefined: lambda_1 + lambda_2 <= 0 at the evaluated point.
class NotTwoConvex : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class DegenerateRadius : public Error {
 public:
  using Error::Error;
};

class CurveTooShort : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Raised by the flow engine when a node leaves the two-convex cone. The flow
/// is halted; the caller decides what to do with the last good state.
class LostTwoConvexity : public Error {
 public:
  LostTwoConvexity(std::int64_t component, double s, double t)
      : Error("lost two-convexity on component " + std::to_string(component) +
              " at s=" + std::to_string(s) + ", t=" + std::to_string(t)),
        component_(component),
        s_(s),
        t_(t) {}

  std::int64_t component() const { return component_; }
  double s() const { return s_; }
  double t() const { return t_; }

 private:
  std::int64_t component_;
  double s_;
  double t_;
};

class TimeStepUnderflow : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a collapsed interior radius during stepping.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

class PastExtinction : public Error {
 public:
  using Error::Error;
};

class ThresholdNotMet : public Error {
 public:
  using Error::Error;
};

class HypothesisNotMet : public Error {
 public:
  using Error::Error;
};

class NoSuitableCrossSection : public Error {
 public:
  using Error::Error;
};

class CapConstructionFailed : public Error {
 public:
  using Error::Error;
};

/// A loop-level precondition or post-surgery assertion failed.
class SurgeryInvariantViolated : public Error {
 public:
  using Error::Error;
};

class AbortTooManySurgeries : public Error {
 public:
  using Error::Error;
};

/// Configuration problems; `field` names the offending key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace gflow
