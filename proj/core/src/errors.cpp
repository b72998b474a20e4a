#include "streamfuse/errors.hpp"

namespace streamfuse {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage: return "usage";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::bad_format: return "bad_format";
    case ErrorCode::dim_mismatch: return "dim_mismatch";
    case ErrorCode::alignment_mismatch: return "alignment_mismatch";
    case ErrorCode::missing_data: return "missing_data";
    case ErrorCode::degenerate_data: return "degenerate_data";
    case ErrorCode::infeasible_target: return "infeasible_target";
    case ErrorCode::checksum_mismatch: return "checksum_mismatch";
    case ErrorCode::numeric_failure: return "numeric_failure";
  }
  return "unknown";
}

StreamError::StreamError(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

int StreamError::exit_code() const {
  switch (code_) {
    case ErrorCode::usage:
      return 1;
    case ErrorCode::numeric_failure:
      return 3;
    default:
      return 2;
  }
}

void raise(ErrorCode code, const std::string& message) {
  throw StreamError(code, message);
}

}  // namespace streamfuse
