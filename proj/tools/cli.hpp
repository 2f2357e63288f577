#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace settler::cli {

/// Runs one command line (without the program name). Returns the process
/// exit code: 0 on success, the error category's code otherwise.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args);

/// Commented INI text listing every configuration key with its default.
std::string_view default_config_text();

}  // namespace settler::cli
