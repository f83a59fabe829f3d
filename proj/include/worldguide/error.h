#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace worldguide {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kDegenerateDepth,
  kInsufficientInliers,
  kFewerThan3Valid,
  kDegenerateConfiguration,
  kAntiparallelGravity,
  kNoValidDepth,
  kInvalidSpec,
  kLengthMismatch,
  kDegenerateTrajectory,
  kFormatError,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so the
// pipeline driver and the CLI can report it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace worldguide
