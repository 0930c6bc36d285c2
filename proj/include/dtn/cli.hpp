#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dtn::cli {

/// Full command-line entry point (args exclude the program name).
/// Exit codes: 0 success, 1 usage/config error, 2 runtime error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace dtn::cli
