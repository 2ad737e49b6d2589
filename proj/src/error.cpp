#include "causalcast/error.hpp"

namespace causalcast {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
      return "config";
    case ErrorKind::data:
      return "data";
    case ErrorKind::numerical:
      return "numerical";
    case ErrorKind::invalid_argument:
      return "invalid_argument";
  }
  return "unknown";
}

}  // namespace causalcast
