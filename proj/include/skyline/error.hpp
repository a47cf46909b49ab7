#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skyline {

enum class ErrorCode {
  ImageTooSmall,
  BadPatchSize,
  NonFiniteInput,
  BadThresholds,
  InvalidParameter,
  DimensionMismatch,
  ConfigMismatch,
  SolveFailure,
  WeightOutOfRange,
  Infeasible,
  LengthMismatch,
  EmptyInput,
  MissingDirectory,
  MalformedGroundTruth,
  NoTrainingPairs,
  NoMatchedPairs,
  BankVersionMismatch,
  BadBankFile,
  UnknownMethod,
  BadConfig,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// All library failures are reported through this exception type; `code()`
/// identifies the failure class so callers can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace skyline
