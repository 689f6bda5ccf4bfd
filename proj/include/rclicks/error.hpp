#pragma once

#include <stdexcept>
#include <string>

namespace rclicks {

enum class ErrorKind {
  kInvalidParameter,
  kNoErrorRegion,
  kDegenerateMap,
  kFormatError,
  kInsufficientSample,
  kAdapterError,
  kNotFound,
  kConflict,
  kMissingDescription,
  kStartupError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kNoErrorRegion: return "no-error-region";
    case ErrorKind::kDegenerateMap: return "degenerate-map";
    case ErrorKind::kFormatError: return "format-error";
    case ErrorKind::kInsufficientSample: return "insufficient-sample";
    case ErrorKind::kAdapterError: return "adapter-error";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kMissingDescription: return "missing-description";
    case ErrorKind::kStartupError: return "startup-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit code or HTTP status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace rclicks
