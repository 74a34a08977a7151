#include "roughcount/error.hpp"

namespace roughcount {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kStageCountMismatch: return "StageCountMismatch";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kMissingPriorDigit: return "MissingPriorDigit";
    case ErrorCode::kDigitOutOfRange: return "DigitOutOfRange";
    case ErrorCode::kProviderFailure: return "ProviderFailure";
    case ErrorCode::kEmptyStore: return "EmptyStore";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kOverlappingBands: return "OverlappingBands";
    case ErrorCode::kBadRange: return "BadRange";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kDTypeUnknown: return "DTypeUnknown";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kConfig: return "Config";
  }
  return "Unknown";
}

}  // namespace roughcount
