#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graphkern {

enum class ErrorCode {
  NonSquare,
  Asymmetric,
  NegativeWeight,
  DimensionMismatch,
  InvalidCoordinates,
  DegenerateCoordinates,
  ConvergenceFailure,
  InvalidArgument,
  InvalidSpan,
  EmptyTrainingSet,
  LengthMismatch,
  SingularSystem,
  ZeroSignal,
  ZeroTruth,
  FailedTrialsExceedHalf,
  ParseError,
  NameMismatch,
  MissingValue,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// True for failures of the numerics (as opposed to bad input or config).
bool is_numeric_failure(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace graphkern
