#pragma once

#include <stdexcept>
#include <string>

namespace fibreopt {

enum class ErrorKind {
  invalid_input,
  invalid_config,
  invalid_problem,
  degenerate_critical_point,
  bound_inapplicable,
  resolution_too_coarse,
  tracking_failed,
  inconsistency,
  unsupported_version,
  corrupt_table,
  table_mismatch,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::invalid_problem: return "invalid-problem";
    case ErrorKind::degenerate_critical_point: return "degenerate-critical-point";
    case ErrorKind::bound_inapplicable: return "bound-inapplicable";
    case ErrorKind::resolution_too_coarse: return "resolution-too-coarse";
    case ErrorKind::tracking_failed: return "tracking-failed";
    case ErrorKind::inconsistency: return "inconsistency";
    case ErrorKind::unsupported_version: return "unsupported-version";
    case ErrorKind::corrupt_table: return "corrupt-table";
    case ErrorKind::table_mismatch: return "table-mismatch";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fibreopt
