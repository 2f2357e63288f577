#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace settler {

/// Coarse failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
  config,       ///< invalid configuration or arguments
  domain,       ///< argument outside the mathematical domain of an operation
  singularity,  ///< denominator collapsed (e.g. chord width at an empty/full separator)
  divergence,   ///< integration left the admissible region
  parse,        ///< malformed input file
  io,           ///< file system failure
  numeric,      ///< non-finite values or unsupported derivative primitive
  reproducibility,  ///< a rerun produced outputs that differ from its manifest
};

std::string_view to_string(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] void fail(ErrorCategory category, const std::string& message);

}  // namespace settler
