#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tngd {

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  NotPositiveDefinite,
  NonFinite,
  TooLarge,
  BreakdownDetected,
  SingularInner,
  DegenerateModel,
  Overflow,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  InsufficientData,
  MalformedLog,
  ConfigError,
  Io,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::BreakdownDetected: return "BreakdownDetected";
    case ErrorCode::SingularInner: return "SingularInner";
    case ErrorCode::DegenerateModel: return "DegenerateModel";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::MalformedLog: return "MalformedLog";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace tngd
