#pragma once

#include <stdexcept>
#include <string>

namespace qv {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used by the CLI and the HTTP layer to map failures onto exit codes and
/// status codes.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define QV_DEFINE_ERROR(Name, tag)                                             \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(tag, what) {}               \
  };

QV_DEFINE_ERROR(InvalidCoordinateError, "invalid-coordinate")
QV_DEFINE_ERROR(RangeError, "range")
QV_DEFINE_ERROR(DomainError, "domain")
QV_DEFINE_ERROR(ConfigError, "configuration")
QV_DEFINE_ERROR(InsufficientDataError, "insufficient-data")
QV_DEFINE_ERROR(ShapeError, "shape")
QV_DEFINE_ERROR(FitError, "fit")
QV_DEFINE_ERROR(SamplingError, "sampling")
QV_DEFINE_ERROR(PlanningError, "planning")
QV_DEFINE_ERROR(ValidationError, "validation")
QV_DEFINE_ERROR(OptimizationError, "optimization")
QV_DEFINE_ERROR(IngestError, "ingestion")
QV_DEFINE_ERROR(ComparisonError, "comparison")
QV_DEFINE_ERROR(IoError, "io")

#undef QV_DEFINE_ERROR

/// Scenario parse failure; carries the offending key and (when known) the
/// 1-based line of the scenario file.
class ParseError : public Error {
public:
  ParseError(std::string key, int line, const std::string& what)
      : Error("parse", what), key_(std::move(key)), line_(line) {}
  [[nodiscard]] const std::string& key() const noexcept { return key_; }
  [[nodiscard]] int line() const noexcept { return line_; }

private:
  std::string key_;
  int line_;
};

} // namespace qv
