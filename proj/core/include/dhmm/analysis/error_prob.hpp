#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhmm/analysis/monte_carlo.hpp"

namespace dhmm::analysis {

/// Fraction of runs whose MAP decision misses the true state, per agent
/// and step. Matrices are K x horizon with column i - 1 holding step i.
struct ErrorSeries {
  std::string label;
  std::size_t agents = 0;
  std::size_t horizon = 0;
  std::size_t runs = 0;
  std::size_t tail_window = 0;
  /// Set for H > 2, where the rate is a generalized misclassification rate.
  bool multiclass = false;

  Eigen::MatrixXd p;
  Eigen::MatrixXd lower;  // 95% Wilson bounds
  Eigen::MatrixXd upper;
  Eigen::VectorXd network;

  /// Tail-window means with 95% half widths from the per-run tail means.
  Eigen::VectorXd tail;
  Eigen::VectorXd tail_half_width;
  double tail_network = 0.0;
  double tail_network_half_width = 0.0;
};

/// Log-belief ratios w_k = log mu_k(1)/mu_k(0) recorded at one step.
struct RatioSamples {
  std::size_t step = 0;
  /// True state per run.
  std::vector<std::size_t> theta;
  /// w[agent][run].
  std::vector<std::vector<double>> w;
};

struct ErrorOptions {
  std::size_t tail_window = 50;
  /// Steps at which to record w for every run (binary models only).
  std::vector<std::size_t> capture_steps;
};

struct ErrorReport {
  ErrorSeries centralized;
  std::vector<ErrorSeries> algorithms;
  /// samples[alg][capture index].
  std::vector<std::vector<RatioSamples>> samples;
};

ErrorReport estimate_error_probs(const Scenario& scenario, std::span<const AlgorithmSpec> algorithms,
                                 const MonteCarloOptions& options, const ErrorOptions& error_options = {});

ErrorSeries estimate_error_prob(const Scenario& scenario, const AlgorithmSpec& algorithm,
                                const MonteCarloOptions& options, std::size_t tail_window = 50);

}  // namespace dhmm::analysis
