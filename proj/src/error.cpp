#include "faasprov/error.hpp"

namespace faasprov {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInsufficientMemory: return "InsufficientMemory";
    case ErrorCode::kDoesNotFitCluster: return "DoesNotFitCluster";
    case ErrorCode::kPackingFailed: return "PackingFailed";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDegenerateDataset: return "DegenerateDataset";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyRegistry: return "EmptyRegistry";
    case ErrorCode::kNoFeasibleConfiguration: return "NoFeasibleConfiguration";
    case ErrorCode::kZeroBaseline: return "ZeroBaseline";
    case ErrorCode::kDataError: return "DataError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDegenerateDataset:
    case ErrorCode::kDataError:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kIoError:  // unreadable or unwritable files count as bad input
      return 2;
    case ErrorCode::kNoFeasibleConfiguration:
    case ErrorCode::kInsufficientMemory:
    case ErrorCode::kDoesNotFitCluster:
    case ErrorCode::kPackingFailed:
      return 3;
    case ErrorCode::kTooLarge:
      return 4;
    default:
      return 1;
  }
}

}  // namespace faasprov
