#ifndef VERISCOPE_ERROR_H_
#define VERISCOPE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace veriscope {

enum class ErrorCode {
  kInvalidArgument,
  kFormatError,
  kEmptyQuery,
  kCannotRelax,
  kRetryable,
  kPageUnavailable,
  kNoMatch,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Format errors that point at a specific input line (1-based).
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& message)
      : Error(ErrorCode::kFormatError,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void ThrowInvalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, message);
}

}  // namespace veriscope

#endif  // VERISCOPE_ERROR_H_
