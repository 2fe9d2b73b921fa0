#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polymerlab {

enum class ErrorCode {
  InvalidArgument,
  EmptySupport,
  InfiniteRange,
  EmptyK,
  RankDeficient,
  SingularCovariance,
  TruncationFailure,
  WindowOverflow,
  DimensionTooLow,
  NotSymmetric,
  EmptySurface,
  NonPositiveValues,
  EmptySeries,
  ConfigError,
  NumericError,
};

/// Coarse grouping used by the command line to pick an exit status.
enum class ErrorCategory { Config, Resource, Numeric };

std::string_view to_string(ErrorCode code);
std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept;

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace polymerlab
