#include "rxid/error.hpp"

namespace rxid {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::InvalidVariance: return "InvalidVariance";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::TooManyNegatives: return "TooManyNegatives";
    case ErrorCode::DegenerateScores: return "DegenerateScores";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::AllZeroWeights: return "AllZeroWeights";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
  }
  return "Unknown";
}

}  // namespace rxid
