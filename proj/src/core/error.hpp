#pragma once

#include <stdexcept>
#include <string>

namespace mmtc {

enum class ErrorCode {
  invalid_argument,
  io,
  parse,
  grammar,
  state,
  internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

} // namespace mmtc
