#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "vuix/stochastic_model.hpp"

namespace vuix::cli {

enum class OutputFormat { Csv, Json };

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kConfigError = 3,
  kNumericalError = 4,
};

struct ExperimentConfig {
  std::string case_path;
  double snr_db = 30.0;
  double rho = 0.1;
  double lambda = 2.0;
  double v = 1.0;
  long long k = 0;
  long long trials = 1000;
  std::uint64_t seed = 0;
  OutputFormat format = OutputFormat::Csv;
  std::string out_path;
  bool sparse = false;
  bool include_slack = true;
  std::optional<long long> measurement;  // 1-based, `cost` only
  unsigned threads = 0;
};

/// Range checks shared by every subcommand; throws ConfigError naming the flag.
void validate(const ExperimentConfig& config);

/// Builds the system model for a config. The case file is either a grid case
/// (MATPOWER script or JSON) or a JSON model with an explicit `jacobian`
/// and optional `state_covariance` / `sigma2`.
SystemModel load_model(const ExperimentConfig& config);

/// Entry point for the `vuix_cli` binary. Results go to `out` (or files
/// under --out), diagnostics to `err`; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vuix::cli
