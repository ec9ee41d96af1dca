#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qftk {

enum class ErrorCode {
  LengthMismatch,
  NotNormalized,
  TargetOutOfRange,
  IndexOutOfRange,
  MissingColumn,
  NonMonotonicTime,
  EmptyAfterCleaning,
  ZeroVariance,
  SplitTooShort,
  FactorizationFailed,
  DimensionMismatch,
  OutOfBox,
  ShapeMismatch,
  KindMismatch,
  AllFitsFailed,
  ZeroMeanObservations,
  CacheCorrupt,
  NoReportsFound,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::TargetOutOfRange: return "TargetOutOfRange";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::EmptyAfterCleaning: return "EmptyAfterCleaning";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SplitTooShort: return "SplitTooShort";
    case ErrorCode::FactorizationFailed: return "FactorizationFailed";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OutOfBox: return "OutOfBox";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::AllFitsFailed: return "AllFitsFailed";
    case ErrorCode::ZeroMeanObservations: return "ZeroMeanObservations";
    case ErrorCode::CacheCorrupt: return "CacheCorrupt";
    case ErrorCode::NoReportsFound: return "NoReportsFound";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qftk
