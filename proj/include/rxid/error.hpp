#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rxid {

enum class ErrorCode {
  ZeroVector,
  InvalidTemperature,
  InvalidVariance,
  OutOfRange,
  TooFewSamples,
  InvalidShape,
  IndexOutOfRange,
  TooManyNegatives,
  DegenerateScores,
  InvalidTarget,
  AllZeroWeights,
  ShapeMismatch,
  StaleCache,
  InvalidConfig,
  IoError,
  FormatError,
  CorruptRecord,
  VersionMismatch,
  DegenerateLabels,
  InvalidRange,
  InsufficientSamples,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rxid
