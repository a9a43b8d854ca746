#pragma once

// Experiment config files: `[plant]`, `[controller]`, `[estimator]` and `[run]`
// sections of `key = value` lines, `#` comments. Matrices are written as rows
// separated by `;` with entries separated by `,` or spaces:
//
//   [plant]
//   kind = ex11
//   disturbance = 5, 10
//
//   [controller]
//   law = mfapc
//   ly = 1
//   lu = 2
//   n = 2
//   nu = 2
//   lambda = 1e-4
//
//   [estimator]
//   source = analytic
//
//   [run]
//   steps = 298
//   reference = square

#include <filesystem>
#include <string>
#include <vector>

#include "mfapc/harness.h"

namespace mfapc {

// Throws ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Writes every field; parse_config(format_config(c)) reproduces c.
std::string format_config(const ExperimentConfig& cfg);

// Matrix syntax shared with the CLI.
MatrixXd parse_matrix(const std::string& text);

std::vector<std::string> builtin_names();
// Throws ConfigError for an unknown name.
ExperimentConfig builtin_config(const std::string& name);

// A built-in name, or a path to a config file.
ExperimentConfig resolve_config(const std::string& name_or_path);

}  // namespace mfapc
