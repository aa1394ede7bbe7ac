#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dhmm/analysis/monte_carlo.hpp"
#include "dhmm/filters.hpp"
#include "dhmm/topology.hpp"

namespace dhmm::harness {

/// Directory searched for preset configs and topologies/<name>.edges.
std::filesystem::path preset_dir();

struct NetworkInfo {
  std::string description;
  std::size_t agents = 0;
  double rho2 = 0.0;
  std::vector<std::size_t> degrees;
};

enum class OracleVariant { Consensus, Diffusion };

struct OracleSettings {
  OracleVariant variant = OracleVariant::Consensus;
  std::size_t steps = 20;
  std::size_t runs = 100000;
  std::size_t merge = 10;
  std::size_t pilot_runs = 2000;
  double tv_limit = 0.05;
  double dp_limit = 0.01;
};

struct CounterexampleSettings {
  std::size_t runs = 100000;
  std::size_t step = 3;
};

/// One fully resolved experiment (a sweep expands into several).
struct ExperimentConfig {
  explicit ExperimentConfig(analysis::Scenario s) : scenario(std::move(s)) {}

  std::string name;
  std::string label;  // sweep point label, empty without a sweep
  std::filesystem::path source;

  analysis::Scenario scenario;
  NetworkInfo network;
  std::vector<AlgorithmSpec> algorithms;
  analysis::MonteCarloOptions run;
  std::size_t tail_window = 50;
  double risk_tol = 0.05;
  double error_tol = 0.01;

  std::optional<OracleSettings> oracle;
  std::optional<CounterexampleSettings> counterexample;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> threads;
};

/// Parses a JSON experiment file. Relative topology paths resolve against
/// the file's directory, then the preset directory. A bare name without an
/// extension or separator is looked up as a preset. Every sub-spec is
/// validated before this returns; failures raise ValidationError naming
/// the offending section.
std::vector<ExperimentConfig> load_experiment(const std::string& path_or_preset,
                                              const Overrides& overrides = {});

/// Same, from an in-memory JSON document.
std::vector<ExperimentConfig> parse_experiment(const std::string& json_text,
                                               const std::filesystem::path& base_dir,
                                               const Overrides& overrides = {});

}  // namespace dhmm::harness
