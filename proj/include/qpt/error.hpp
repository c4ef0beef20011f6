#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qpt {

enum class ErrorCode {
  NonHermitian,
  NoConvergence,
  NotPSD,
  RankDeficient,
  DimensionMismatch,
  NotState,
  NotUnitary,
  BadParameter,
  BadPOVM,
  Unsupported,
  TooFewSamples,
  TuningFailed,
  SolverFailure,
  InsufficientBins,
  DegenerateFit,
  TargetUnreachable,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qpt
