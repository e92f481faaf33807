#pragma once

// Command-line front end. run_cli parses argv, runs one subcommand and
// returns the process exit code: 0 on success, 2 for bad paths or config,
// 1 for any other failure.

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nd::cli {

/// Bad configuration or unusable path; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nd::cli
