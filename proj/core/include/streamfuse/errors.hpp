#pragma once

#include <stdexcept>
#include <string>

namespace streamfuse {

enum class ErrorCode {
  usage,               // bad invocation / bad config schema
  bad_magic,           // .fmat magic bytes wrong
  version_mismatch,    // .fmat version unsupported
  truncated,           // payload size disagrees with header
  non_finite,          // NaN/Inf where finite values are required
  bad_format,          // malformed file contents (JSON/CSV/header fields)
  dim_mismatch,        // operand dimensions disagree
  alignment_mismatch,  // video ids / class columns disagree across inputs
  missing_data,        // required input absent (file, proposals, labels)
  degenerate_data,     // input lacks the variation an algorithm needs
  infeasible_target,   // requested target cannot be met (e.g. accuracy < 1/K)
  checksum_mismatch,   // stored block does not match its descriptor
  numeric_failure,     // solver failed to converge / produced non-finite state
};

const char* error_code_name(ErrorCode code);

class StreamError : public std::runtime_error {
 public:
  StreamError(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

  // Process exit code contract: 1 usage, 2 data, 3 numerical.
  int exit_code() const;

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace streamfuse
