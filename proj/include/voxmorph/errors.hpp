#pragma once

#include <stdexcept>
#include <string>

namespace voxmorph {

// Error taxonomy shared by the whole toolkit. The CLI maps categories to
// exit codes (config -> 2, input -> 3, processing -> 4).
enum class ErrorKind {
  config,
  input,
  format,
  dimension_mismatch,
  empty_input,
  schema,
  row,
  unit,
  degenerate_histogram,
  resolution,
  capacity,
  contract,
  not_found, // a required input path does not exist or cannot be opened
  io,        // write-side failures
  processing,
};

enum class ErrorCategory { config, input, processing };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  ErrorCategory category() const {
    switch (kind_) {
      case ErrorKind::config:
        return ErrorCategory::config;
      case ErrorKind::input:
      case ErrorKind::format:
      case ErrorKind::dimension_mismatch:
      case ErrorKind::empty_input:
      case ErrorKind::schema:
      case ErrorKind::row:
      case ErrorKind::unit:
      case ErrorKind::not_found:
        return ErrorCategory::input;
      default:
        return ErrorCategory::processing;
    }
  }

private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::input: return "input";
    case ErrorKind::format: return "format";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::schema: return "schema";
    case ErrorKind::row: return "row";
    case ErrorKind::unit: return "unit";
    case ErrorKind::degenerate_histogram: return "degenerate-histogram";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::contract: return "contract";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::io: return "io";
    case ErrorKind::processing: return "processing";
  }
  return "unknown";
}

} // namespace voxmorph
