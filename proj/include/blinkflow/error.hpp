#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace blinkflow {

enum class ErrorKind {
  InvalidInput,
  Parse,
  Ordering,
  Configuration,
  InsufficientData,
  NumericalDegeneracy,
  Labeling,
  DegenerateLabeling,
  NumericOverflow,
  TrainingFailure,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  // line is 1-based; 0 when the failure is not tied to a line.
  ParseError(std::size_t line, const std::string& what);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TrainingError : public Error {
 public:
  TrainingError(std::size_t epoch, const std::string& what);

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const char* what) {
  if (!condition) fail(kind, what);
}

}  // namespace blinkflow
