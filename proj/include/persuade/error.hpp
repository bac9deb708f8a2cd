#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace persuade {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NegativeEntry,
  RowSumViolation,
  ZeroProbabilitySignal,
  NegativeValuation,
  EmptyBidSet,
  DuplicateBidder,
  EmptyInput,
  DegenerateAuction,
  VocabularyTooSmall,
  WrongStateCount,
  StateSpaceTooLarge,
  SearchTooLarge,
  EmptyCandidateSet,
  SchemaViolation,
  BadRatios,
  TooFewGroups,
  LengthMismatch,
  FeatureMismatch,
  OutcomeMismatch,
  SerializationFailure,
  ConfigError,
  MissingInput,
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::RowSumViolation: return "RowSumViolation";
    case ErrorCode::ZeroProbabilitySignal: return "ZeroProbabilitySignal";
    case ErrorCode::NegativeValuation: return "NegativeValuation";
    case ErrorCode::EmptyBidSet: return "EmptyBidSet";
    case ErrorCode::DuplicateBidder: return "DuplicateBidder";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateAuction: return "DegenerateAuction";
    case ErrorCode::VocabularyTooSmall: return "VocabularyTooSmall";
    case ErrorCode::WrongStateCount: return "WrongStateCount";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::SearchTooLarge: return "SearchTooLarge";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::FeatureMismatch: return "FeatureMismatch";
    case ErrorCode::OutcomeMismatch: return "OutcomeMismatch";
    case ErrorCode::SerializationFailure: return "SerializationFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingInput: return "MissingInput";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // what() without the code prefix, for wrapping into another error.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace persuade
