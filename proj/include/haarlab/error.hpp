#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace haarlab {

enum class ErrorCode {
  NotHermitian,
  NotPositiveDefinite,
  ShapeMismatch,
  OutOfTree,
  MissingCoefficient,
  InfeasibleMoments,
  GridTooCoarse,
  DomainViolation,
  DepthExceeded,
  IndexOutOfRange,
  DimensionTooLarge,
  PreconditionViolated,
  DynamicsViolated,
  MidpointMismatch,
  ConditionViolated,
  EigenIndexOutOfRange,
  SearchFailed,
  BudgetExceeded,
  ConfigInvalid,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OutOfTree: return "OutOfTree";
    case ErrorCode::MissingCoefficient: return "MissingCoefficient";
    case ErrorCode::InfeasibleMoments: return "InfeasibleMoments";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::DynamicsViolated: return "DynamicsViolated";
    case ErrorCode::MidpointMismatch: return "MidpointMismatch";
    case ErrorCode::ConditionViolated: return "ConditionViolated";
    case ErrorCode::EigenIndexOutOfRange: return "EigenIndexOutOfRange";
    case ErrorCode::SearchFailed: return "SearchFailed";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace haarlab
