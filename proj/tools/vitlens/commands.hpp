#pragma once

#include <string>
#include <vector>

namespace vitlens::cli {

/// Parses `args` (without the program name), runs one subcommand and
/// returns the process exit status.
int run_cli(const std::vector<std::string>& args);

}  // namespace vitlens::cli
