#include "veriscope/error.h"

namespace veriscope {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kFormatError: return "format-error";
    case ErrorCode::kEmptyQuery: return "empty-query";
    case ErrorCode::kCannotRelax: return "cannot-relax";
    case ErrorCode::kRetryable: return "retryable";
    case ErrorCode::kPageUnavailable: return "page-unavailable";
    case ErrorCode::kNoMatch: return "no-match";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

}  // namespace veriscope
