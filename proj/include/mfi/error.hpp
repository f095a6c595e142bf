#pragma once

#include <stdexcept>
#include <string>

namespace mfi {

enum class ErrorCode {
  InvalidArgument,
  EmptyInterval,
  NotContained,
  ResolutionTooCoarse,
  Infeasible,
  Unbounded,
  InfeasibleTarget,
  ShapeHintInvalid,
  FullSupportRequired,
  NotContingentDebt,
  BudgetExceeded,
  Schema,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::NotContained: return "NotContained";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorCode::ShapeHintInvalid: return "ShapeHintInvalid";
    case ErrorCode::FullSupportRequired: return "FullSupportRequired";
    case ErrorCode::NotContingentDebt: return "NotContingentDebt";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::Schema: return "Schema";
  }
  return "Unknown";
}

}  // namespace mfi
