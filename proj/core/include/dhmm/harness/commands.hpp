#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dhmm/analysis/density.hpp"
#include "dhmm/harness/config.hpp"

namespace dhmm::harness {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRuntime = 2,
  kExitAcceptance = 3,
};

struct CommandOptions {
  std::string config;
  Overrides overrides;
  std::filesystem::path out = "out";
  bool emit_beliefs = false;
};

/// Per-step records for every run: records_<label>.csv with columns
/// run,step,agent,theta_true,map,err,kl_cent, optional beliefs_<label>.csv,
/// and summary.json.
int cmd_simulate(const CommandOptions& options, std::ostream& log);
/// Risk series, tail statistics and asymptotic bounds per sweep point.
int cmd_risk(const CommandOptions& options, std::ostream& log);
/// Error-probability series with Wilson bounds and convergence flags.
int cmd_error(const CommandOptions& options, std::ostream& log);
/// Grid density evolution against Monte Carlo. Returns kExitAcceptance
/// when the agreement limits are missed.
int cmd_oracle(const CommandOptions& options, std::ostream& log);
/// Three-agent counter-example report. Returns kExitAcceptance on failure.
int cmd_counterexample(const CommandOptions& options, std::ostream& log);

struct OracleReport {
  std::string variant;
  std::size_t step = 0;
  std::size_t runs = 0;
  analysis::GridSpec grid;
  double leakage = 0.0;
  double tv = 0.0;
  std::vector<double> p_grid;
  std::vector<double> p_mc;
  double max_abs_dp = 0.0;
  double tv_limit = 0.0;
  double dp_limit = 0.0;
  bool tv_ok = false;
  bool dp_ok = false;
  /// Consensus is judged on tv, diffusion on the error probabilities.
  bool passed = false;
};

/// Density evolution for config.oracle against a Monte Carlo run of the
/// matching filter, compared at the final oracle step.
OracleReport run_oracle(const ExperimentConfig& config);

}  // namespace dhmm::harness
