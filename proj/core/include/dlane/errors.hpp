#pragma once

#include <stdexcept>
#include <string>

namespace dlane {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point sits at or behind the camera plane, or a ray misses the ground.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A lane covers too few rows (or points) for the requested operation.
class DegenerateLane : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Fewer distinct abscissae than polynomial coefficients.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Prediction and ground truth share no common image rows.
class NoOverlap : public Error {
 public:
  using Error::Error;
};

/// An objective or parameter became NaN or infinite during optimisation.
class NonFinite : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number and a JSON-ish field path.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace dlane
