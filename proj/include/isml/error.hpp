#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace isml {

enum class ErrorCode {
  RaggedRows,
  BadToken,
  BadLabel,
  EmptyCell,
  TooFewClassifiers,
  InsufficientSamples,
  ParamOutOfRange,
  DegenerateSpectrum,
  DegenerateDesign,
  BOutOfRange,
  UnclippedAccuracies,
  OneClassOnly,
  BadSubset,
  PerturbationOutOfRange,
  SpecOutOfRange,
  NonPositiveValue,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::BadToken: return "BadToken";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::TooFewClassifiers: return "TooFewClassifiers";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::BOutOfRange: return "BOutOfRange";
    case ErrorCode::UnclippedAccuracies: return "UnclippedAccuracies";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::BadSubset: return "BadSubset";
    case ErrorCode::PerturbationOutOfRange: return "PerturbationOutOfRange";
    case ErrorCode::SpecOutOfRange: return "SpecOutOfRange";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }

 private:
  ErrorCode code_;
};

// Parse-stage failures (CLI exit 2).
constexpr bool is_parse_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RaggedRows:
    case ErrorCode::BadToken:
    case ErrorCode::BadLabel:
    case ErrorCode::EmptyCell:
    case ErrorCode::TooFewClassifiers:
      return true;
    default:
      return false;
  }
}

}  // namespace isml
