#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace unmix {

enum class ErrorCode {
  DimensionMismatch,
  InfeasibleLowerBounds,
  NonFiniteInput,
  InvalidConfig,
  RankDeficientLibrary,
  EmptyFreeSet,
  NoBlockingIndex,
  InstanceTooLarge,
  NoFeasibleCandidate,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InfeasibleLowerBounds: return "InfeasibleLowerBounds";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::RankDeficientLibrary: return "RankDeficientLibrary";
    case ErrorCode::EmptyFreeSet: return "EmptyFreeSet";
    case ErrorCode::NoBlockingIndex: return "NoBlockingIndex";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::NoFeasibleCandidate: return "NoFeasibleCandidate";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class UnmixError : public std::runtime_error
{
public:
  UnmixError(ErrorCode code, const std::string & what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace unmix
