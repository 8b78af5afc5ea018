#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stackfed {

enum class ErrorCode {
  kFileNotFound,
  kEmptyFile,
  kTargetNotFound,
  kMalformedInput,
  kTooFewClasses,
  kClassTooSmall,
  kUnknownCategory,
  kInvalidArgument,
  kDegeneratePartition,
  kColumnMismatch,
  kDuplicateEntry,
  kRegistryFrozen,
  kRegistryNotFrozen,
  kUndefinedMetric,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type; the
// code lets callers (and tests) tell failure classes apart without parsing the
// message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stackfed
