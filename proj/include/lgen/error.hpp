#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lgen {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes (usage = 1, data = 2, verification = 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class EmbeddingErrorKind {
  io,
  magic,
  version,
  dimension,
  record_count,
  token_count,
  truncated,
};

inline const char* to_string(EmbeddingErrorKind kind) {
  switch (kind) {
    case EmbeddingErrorKind::io: return "io";
    case EmbeddingErrorKind::magic: return "magic mismatch";
    case EmbeddingErrorKind::version: return "unsupported version";
    case EmbeddingErrorKind::dimension: return "dimension mismatch";
    case EmbeddingErrorKind::record_count: return "record count mismatch";
    case EmbeddingErrorKind::token_count: return "token count mismatch";
    case EmbeddingErrorKind::truncated: return "truncated file";
  }
  return "unknown";
}

class EmbeddingError : public DataError {
 public:
  EmbeddingError(EmbeddingErrorKind kind, const std::string& detail)
      : DataError(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  EmbeddingErrorKind kind() const noexcept { return kind_; }

 private:
  EmbeddingErrorKind kind_;
};

// Shape or argument contract violated by a caller of the numeric kernels.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace lgen
