#include "ahid/errors.hpp"

namespace ahid {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonZeroMean: return "NonZeroMean";
    case ErrorCode::NonPositiveArea: return "NonPositiveArea";
    case ErrorCode::EigensolverFailure: return "EigensolverFailure";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::NegativeInteriorEigenvalue: return "NegativeInteriorEigenvalue";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::LostPositivity: return "LostPositivity";
    case ErrorCode::SingularMetric: return "SingularMetric";
    case ErrorCode::MissingDerivatives: return "MissingDerivatives";
    case ErrorCode::SearchExhausted: return "SearchExhausted";
    case ErrorCode::NotRotationallySymmetric: return "NotRotationallySymmetric";
    case ErrorCode::BridgeInfeasible: return "BridgeInfeasible";
    case ErrorCode::VerificationFailure: return "VerificationFailure";
    case ErrorCode::NoPositivePoint: return "NoPositivePoint";
    case ErrorCode::MaxDepthExceeded: return "MaxDepthExceeded";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::VerificationFailure: return 2;
    case ErrorCode::BridgeInfeasible: return 3;
    case ErrorCode::NoSignChange: return 4;
    case ErrorCode::NegativeInteriorEigenvalue: return 5;
    case ErrorCode::SearchExhausted: return 6;
    case ErrorCode::NoPositivePoint:
    case ErrorCode::MaxDepthExceeded: return 7;
    case ErrorCode::EigensolverFailure:
    case ErrorCode::StepSizeUnderflow:
    case ErrorCode::LostPositivity:
    case ErrorCode::SingularMetric:
    case ErrorCode::NonZeroMean:
    case ErrorCode::NonPositiveArea:
    case ErrorCode::ZeroNorm:
    case ErrorCode::MissingDerivatives:
    case ErrorCode::NotRotationallySymmetric: return 8;
    case ErrorCode::IoError: return 9;
    case ErrorCode::InvalidInput: return 1;
  }
  return 1;
}

}  // namespace ahid
