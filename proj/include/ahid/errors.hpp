#pragma once

#include <stdexcept>
#include <string>

namespace ahid {

// Failure classes surfaced by the numerical modules. The CLI maps each one
// to a distinct process exit code (see exit_code()).
enum class ErrorCode {
  NonZeroMean,
  NonPositiveArea,
  EigensolverFailure,
  ZeroNorm,
  NegativeInteriorEigenvalue,
  StepSizeUnderflow,
  LostPositivity,
  SingularMetric,
  MissingDerivatives,
  SearchExhausted,
  NotRotationallySymmetric,
  BridgeInfeasible,
  VerificationFailure,
  NoPositivePoint,
  MaxDepthExceeded,
  NoSignChange,
  InvalidInput,
  IoError,
};

const char* to_string(ErrorCode code);

/// Process exit code used by the command-line tool for a given failure.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ahid
