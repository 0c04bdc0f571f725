#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rankfeat {

enum class ErrorKind {
  kInvalidInput,
  kDegenerateInput,
  kFormat,
  kNotImplemented,
  kIo,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what)
      : Error(ErrorKind::kInvalidInput, what) {}
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what)
      : Error(ErrorKind::kDegenerateInput, what) {}
};

/// Malformed file content. `offset()` is the byte position where parsing
/// stopped making sense.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(ErrorKind::kFormat,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class NotImplementedError : public Error {
 public:
  explicit NotImplementedError(const std::string& what)
      : Error(ErrorKind::kNotImplemented, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

}  // namespace rankfeat
