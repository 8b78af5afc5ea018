#include "stackfed/error.hpp"

namespace stackfed {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "file not found";
    case ErrorCode::kEmptyFile: return "empty file";
    case ErrorCode::kTargetNotFound: return "target not found";
    case ErrorCode::kMalformedInput: return "malformed input";
    case ErrorCode::kTooFewClasses: return "too few classes";
    case ErrorCode::kClassTooSmall: return "class too small";
    case ErrorCode::kUnknownCategory: return "unknown category";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDegeneratePartition: return "degenerate partition";
    case ErrorCode::kColumnMismatch: return "column mismatch";
    case ErrorCode::kDuplicateEntry: return "duplicate entry";
    case ErrorCode::kRegistryFrozen: return "registry frozen";
    case ErrorCode::kRegistryNotFrozen: return "registry not frozen";
    case ErrorCode::kUndefinedMetric: return "undefined metric";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

}  // namespace stackfed
