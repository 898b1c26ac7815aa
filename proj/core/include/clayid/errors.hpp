#pragma once

#include <stdexcept>
#include <string>

namespace clayid {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A type or operation invariant was violated by an input value.
class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

/// Input lies outside the mathematical domain of an operation
/// (e.g. temperature above the melting point).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The integrator reached t_max with the indenter still moving fast.
class NonTerminationError : public Error {
 public:
  using Error::Error;
};

/// Displacement or velocity became non-finite during integration.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// Requested bundled fixture does not exist.
class UnknownFixtureError : public Error {
 public:
  using Error::Error;
};

/// A persisted file does not match the expected schema; the message
/// names the offending column or field.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// An operation produced or would produce an empty result set.
class EmptyResultError : public Error {
 public:
  using Error::Error;
};

/// Too few rows to compute the requested statistic.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A statistic is undefined on the given data (e.g. constant column).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Training loss became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes do not chain consistently.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Candidate grid size exceeds the configured cap.
class GridOverflowError : public Error {
 public:
  using Error::Error;
};

/// No candidate qualified in all impact cases.
class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

/// Pipeline configuration is missing, malformed, or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; the message names the stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error("stage " + stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace clayid
