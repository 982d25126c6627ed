#pragma once

#include <stdexcept>
#include <string>

namespace faasprov {

enum class ErrorCode {
  kInvalidArgument,
  kInsufficientMemory,
  kDoesNotFitCluster,
  kPackingFailed,
  kTooLarge,
  kDimensionMismatch,
  kDegenerateDataset,
  kDuplicateId,
  kEmptyRegistry,
  kNoFeasibleConfiguration,
  kZeroBaseline,
  kDataError,
  kIoError,
};

const char* to_string(ErrorCode code);

// Process exit status used by the command-line tool:
// 0 success, 2 data error, 3 infeasible, 4 size limit, 1 anything else.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace faasprov
