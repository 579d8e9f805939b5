#include "orbtrack/errors.hpp"

namespace orbtrack {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidState: return "invalid-state";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Numerical: return "numerical-failure";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::DegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::DegenerateEnsemble: return "degenerate-ensemble";
    case ErrorKind::TotalDepletion: return "total-depletion";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::EmptyThreshold: return "empty-threshold-set";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Propagation: return "propagation";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

}  // namespace orbtrack
