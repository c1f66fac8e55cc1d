#include "sphereflow/errors.hpp"

namespace sphereflow {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SpacingTooCoarse: return "SpacingTooCoarse";
    case ErrorCode::NoGraphAvailable: return "NoGraphAvailable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NearZeroVector: return "NearZeroVector";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OrderTooHighForGrid: return "OrderTooHighForGrid";
    case ErrorCode::CflViolated: return "CFLViolated";
    case ErrorCode::NormBlowup: return "NormBlowup";
    case ErrorCode::TimeNotBeforeCenter: return "TimeNotBeforeCenter";
    case ErrorCode::WindowOutsideTrajectory: return "WindowOutsideTrajectory";
    case ErrorCode::KernelUnderresolved: return "KernelUnderresolved";
    case ErrorCode::UnboundedDomainUnsupported: return "UnboundedDomainUnsupported";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::TooFewScales: return "TooFewScales";
    case ErrorCode::PoleProximity: return "PoleProximity";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace sphereflow
