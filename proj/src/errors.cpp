#include "omx2d/errors.hpp"

namespace omx2d {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::degenerate_steady_state: return "degenerate-steady-state";
    case ErrorKind::truncation_too_small: return "truncation-too-small";
    case ErrorKind::undefined_correlation: return "undefined-correlation";
    case ErrorKind::divergent_response: return "divergent-response";
    case ErrorKind::integration_failure: return "integration-failure";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

TruncationError::TruncationError(const std::string& what, double eigenvalue)
    : Error(ErrorKind::truncation_too_small, what), eigenvalue_(eigenvalue) {}

DivergenceError::DivergenceError(const std::string& what, double location)
    : Error(ErrorKind::divergent_response, what), location_(location) {}

IntegrationError::IntegrationError(const std::string& what, double lo, double hi,
                                   double panel_error)
    : Error(ErrorKind::integration_failure, what),
      lo_(lo), hi_(hi), panel_error_(panel_error) {}

}  // namespace omx2d
