#pragma once

#include <stdexcept>
#include <string>

namespace geodemo {

/// Broad failure class. Maps one-to-one onto the CLI exit codes.
enum class ErrorCategory {
  Config = 2,
  Data = 3,
  Numerical = 4,
};

/// Base for every error raised by the library. `kind()` is a stable
/// identifier (e.g. "MissingColumn") that tests and callers can match on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message),
        category_(category),
        kind_(std::move(kind)) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
  std::string kind_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string kind, const std::string& message)
      : Error(ErrorCategory::Config, std::move(kind), message) {}
};

class DataError : public Error {
 public:
  DataError(std::string kind, const std::string& message)
      : Error(ErrorCategory::Data, std::move(kind), message) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string kind, const std::string& message)
      : Error(ErrorCategory::Numerical, std::move(kind), message) {}
};

}  // namespace geodemo
