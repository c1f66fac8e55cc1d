#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sphereflow {

enum class ErrorCode {
  InvalidArgument,
  SpacingTooCoarse,
  NoGraphAvailable,
  DimensionMismatch,
  NearZeroVector,
  GridMismatch,
  NoConvergence,
  OrderTooHighForGrid,
  CflViolated,
  NormBlowup,
  TimeNotBeforeCenter,
  WindowOutsideTrajectory,
  KernelUnderresolved,
  UnboundedDomainUnsupported,
  EmptyIntersection,
  TooFewScales,
  PoleProximity,
  InvalidConfig,
  Io,
};

std::string_view error_code_name(ErrorCode code);

/// Single exception type for the library; the code is machine-readable and
/// ends up in the CLI's error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace sphereflow
