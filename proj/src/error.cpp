#include "graphkern/error.hpp"

namespace graphkern {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::Asymmetric: return "Asymmetric";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidCoordinates: return "InvalidCoordinates";
    case ErrorCode::DegenerateCoordinates: return "DegenerateCoordinates";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpan: return "InvalidSpan";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ZeroSignal: return "ZeroSignal";
    case ErrorCode::ZeroTruth: return "ZeroTruth";
    case ErrorCode::FailedTrialsExceedHalf: return "FailedTrialsExceedHalf";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NameMismatch: return "NameMismatch";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_numeric_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::SingularSystem:
    case ErrorCode::FailedTrialsExceedHalf:
      return true;
    default:
      return false;
  }
}

}  // namespace graphkern
