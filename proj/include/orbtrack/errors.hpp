#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace orbtrack {

enum class ErrorKind {
  InvalidState,
  Configuration,
  Numerical,
  Domain,
  DegenerateGeometry,
  DegenerateEnsemble,
  TotalDepletion,
  InsufficientData,
  Alignment,
  EmptyThreshold,
  Parse,
  Propagation,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace orbtrack
