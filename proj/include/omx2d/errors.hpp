#pragma once

#include <stdexcept>
#include <string>

namespace omx2d {

enum class ErrorKind {
  invalid_dimension,
  invalid_parameter,
  invalid_input,
  degenerate_steady_state,
  truncation_too_small,
  undefined_correlation,
  divergent_response,
  integration_failure,
  configuration,
  parse,
};

const char* to_string(ErrorKind kind);

/// Base class of every error raised by the library. The kind drives the
/// CLI exit code (configuration/parse -> 2, everything else -> 3).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }
  bool is_configuration() const noexcept {
    return kind_ == ErrorKind::configuration || kind_ == ErrorKind::parse;
  }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Positivity of a steady state broke down beyond tolerance.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double eigenvalue);
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

/// A response or spectrum denominator vanished at `location` (rad/s).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double location);
  double location() const noexcept { return location_; }

 private:
  double location_;
};

/// Adaptive quadrature ran out of budget; carries the worst panel.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double lo, double hi,
                   double panel_error);
  double panel_lo() const noexcept { return lo_; }
  double panel_hi() const noexcept { return hi_; }
  double panel_error() const noexcept { return panel_error_; }

 private:
  double lo_, hi_, panel_error_;
};

}  // namespace omx2d
