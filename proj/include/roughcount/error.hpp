#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roughcount {

enum class ErrorCode {
  kInvalidArgument,
  kZeroVector,
  kDimensionMismatch,
  kEmptyBatch,
  kStageCountMismatch,
  kOutOfRange,
  kMissingPriorDigit,
  kDigitOutOfRange,
  kProviderFailure,
  kEmptyStore,
  kLengthMismatch,
  kEmpty,
  kOverlappingBands,
  kBadRange,
  kNonFiniteLoss,
  kBadMagic,
  kVersionUnsupported,
  kTruncatedPayload,
  kDTypeUnknown,
  kIo,
  kConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace roughcount
