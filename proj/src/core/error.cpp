#include "settler/core/error.hpp"

namespace settler {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::singularity: return "singularity";
    case ErrorCategory::divergence: return "divergence";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::io: return "io";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::reproducibility: return "reproducibility";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::domain: return 3;
    case ErrorCategory::singularity: return 4;
    case ErrorCategory::divergence: return 5;
    case ErrorCategory::parse: return 6;
    case ErrorCategory::io: return 7;
    case ErrorCategory::numeric: return 8;
    case ErrorCategory::reproducibility: return 9;
  }
  return 1;
}

void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace settler
