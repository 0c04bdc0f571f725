#include "rankfeat/error.hpp"

namespace rankfeat {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput:
      return "invalid input";
    case ErrorKind::kDegenerateInput:
      return "degenerate input";
    case ErrorKind::kFormat:
      return "format error";
    case ErrorKind::kNotImplemented:
      return "not implemented";
    case ErrorKind::kIo:
      return "i/o error";
  }
  return "error";
}

}  // namespace rankfeat
