#include "polymerlab/error.hpp"

namespace polymerlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::InfiniteRange: return "InfiniteRange";
    case ErrorCode::EmptyK: return "EmptyK";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::TruncationFailure: return "TruncationFailure";
    case ErrorCode::WindowOverflow: return "WindowOverflow";
    case ErrorCode::DimensionTooLow: return "DimensionTooLow";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::EmptySurface: return "EmptySurface";
    case ErrorCode::NonPositiveValues: return "NonPositiveValues";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NumericError: return "NumericError";
  }
  return "Unknown";
}

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return "ConfigError";
    case ErrorCategory::Resource: return "ResourceError";
    case ErrorCategory::Numeric: return "NumericError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ErrorCategory Error::category() const noexcept {
  switch (code_) {
    case ErrorCode::WindowOverflow:
      return ErrorCategory::Resource;
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
      return ErrorCategory::Config;
    default:
      return ErrorCategory::Numeric;
  }
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace polymerlab
