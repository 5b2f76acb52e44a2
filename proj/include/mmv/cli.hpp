#pragma once

#include <map>
#include <string>
#include <vector>

#include "mmv/common.hpp"

namespace mmv {

// A fully parsed invocation: one subcommand plus flat key=value settings
// (config file entries already merged, command-line pairs winning).
struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> values;
};

// args excludes the program name. Accepted forms after the subcommand:
//   key=value      --key value      --key=value      --config FILE
// The config file holds one key=value per line ('#' comments allowed);
// command-line pairs override file entries.
RunConfig parse_args(const std::vector<std::string>& args);

// Validates the config against the subcommand's key set and executes it,
// writing the data file, its JSON sidecar, and returning 0. Throws
// ConfigError / std::invalid_argument for bad configs and NumericalError
// for numerical failures.
int run(const RunConfig& config);

// Process entry point: parse + run with errors rendered to stderr as a
// one-line JSON record. Exit codes: 0 success, 2 config error,
// 3 numerical or internal failure.
int main_impl(int argc, char** argv);

}  // namespace mmv
