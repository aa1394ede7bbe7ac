#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhmm/analysis/monte_carlo.hpp"

namespace dhmm::analysis {

/// Monte Carlo estimates of J_{k,i} = E KL(mu*_i || mu_{k,i}) and the prior
/// risk E KL(eta*_i || eta_{k,i}). Matrices are K x horizon with column
/// i - 1 holding step i.
struct RiskSeries {
  std::string label;
  std::size_t agents = 0;
  std::size_t horizon = 0;
  std::size_t runs = 0;
  std::size_t tail_window = 0;

  Eigen::MatrixXd posterior;
  Eigen::MatrixXd posterior_se;
  Eigen::MatrixXd prior;
  Eigen::MatrixXd prior_se;
  Eigen::VectorXd network_posterior;
  Eigen::VectorXd network_prior;

  /// Tail-window means; standard errors come from the per-run tail means.
  Eigen::VectorXd tail_posterior;
  Eigen::VectorXd tail_posterior_se;
  Eigen::VectorXd tail_prior;
  double tail_network_posterior = 0.0;
  double tail_network_posterior_se = 0.0;
  double tail_network_prior = 0.0;
  double tail_network_prior_se = 0.0;
};

/// Runs the centralized filter and each algorithm on shared trajectories
/// and observations.
std::vector<RiskSeries> estimate_risks(const Scenario& scenario,
                                       std::span<const AlgorithmSpec> algorithms,
                                       const MonteCarloOptions& options,
                                       std::size_t tail_window = 50);

RiskSeries estimate_risks(const Scenario& scenario, const AlgorithmSpec& algorithm,
                          const MonteCarloOptions& options, std::size_t tail_window = 50);

}  // namespace dhmm::analysis
