#include "blinkflow/error.hpp"

namespace blinkflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Ordering: return "ordering error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::NumericalDegeneracy: return "numerical degeneracy";
    case ErrorKind::Labeling: return "labeling error";
    case ErrorKind::DegenerateLabeling: return "degenerate labeling";
    case ErrorKind::NumericOverflow: return "numeric overflow";
    case ErrorKind::TrainingFailure: return "training failure";
    case ErrorKind::Io: return "I/O error";
  }
  return "unknown error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error(ErrorKind::Parse, line ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

TrainingError::TrainingError(std::size_t epoch, const std::string& what)
    : Error(ErrorKind::TrainingFailure, "epoch " + std::to_string(epoch) + ": " + what),
      epoch_(epoch) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace blinkflow
