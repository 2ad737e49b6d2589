#pragma once

#include <stdexcept>
#include <string>

namespace causalcast {

// Numeric values double as CLI exit codes.
enum class ErrorKind {
  config = 1,
  data = 2,
  numerical = 3,
  invalid_argument = 4,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace causalcast
