#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dhmm/analysis/error_prob.hpp"
#include "dhmm/markov.hpp"
#include "dhmm/observation.hpp"
#include "dhmm/topology.hpp"

namespace dhmm::analysis {

/// Rectangular grid of `points` cells per axis over [lower_d, upper_d].
/// Cell centres are lower + (j + 1/2) * width.
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t points = 0;

  std::size_t dimension() const { return lower.size(); }
  double width(std::size_t axis) const;
  double centre(std::size_t axis, std::size_t j) const;
  std::size_t cells() const;
};

struct DensityOptions {
  std::size_t steps = 20;
  /// Explicit grid; otherwise mean +- 6 sd of a pilot simulation per axis.
  std::optional<GridSpec> grid;
  /// Cells per axis when the grid is automatic; 0 picks 201, 101 or 31
  /// for dimensions 1, 2 and 3.
  std::size_t points = 0;
  std::size_t pilot_runs = 2000;
  std::uint64_t seed = 1;
  /// Cumulative probability mass allowed to fall off the grid.
  double leakage_limit = 1e-3;
  bool keep_history = false;
  std::optional<Belief> state_prior;
  std::optional<Belief> initial_belief;
};

/// Joint law of (theta_i, grid coordinate) as per-cell probabilities.
/// For consensus the coordinate is the K-vector of log-belief ratios; for
/// diffusion it is the reduced r-vector w_Q with w = Q^T w_Q.
struct GridDensity {
  std::size_t dimension = 0;
  std::size_t agents = 0;
  std::size_t steps = 0;
  GridSpec grid;
  /// K x r map from grid coordinates to agent log-belief ratios.
  Eigen::MatrixXd agent_map;
  /// r x K map from agent log-belief ratios to grid coordinates.
  Eigen::MatrixXd grid_from_agents;

  /// Cell masses after the final step; index = sum_d j_d * points^d.
  std::array<std::vector<double>, 2> mass;
  /// mass after each step when requested (entry i - 1 is step i).
  std::vector<std::array<std::vector<double>, 2>> history;

  /// K x steps. error_given0(k, i-1) = P(theta_i = 0, w_k > 0), and
  /// error_given1 = P(theta_i = 1, w_k <= 0); error is their sum.
  Eigen::MatrixXd error;
  Eigen::MatrixXd error_given0;
  Eigen::MatrixXd error_given1;
  /// Total grid mass after each step.
  std::vector<double> total_mass;
  double leakage = 0.0;

  double cell_volume() const;
  /// Density value mass / cell volume.
  double density(std::size_t theta, std::size_t cell) const;
};

/// Consensus recursion w = nu + A^T chi(w') on a K-dimensional grid (K <= 3).
/// Requires binary Gaussian likelihoods with distinct means.
GridDensity density_evolution_consensus(const TransitionModel& transition,
                                        const NetworkLikelihoods& models,
                                        const CombinationMatrix& a, double gamma,
                                        const DensityOptions& options = {});

/// Diffusion recursion in the reduced space of the low-rank factor (r <= 2).
GridDensity density_evolution_diffusion(const TransitionModel& transition,
                                        const NetworkLikelihoods& models,
                                        const CombinationMatrix& a, double gamma,
                                        const DensityOptions& options = {});

/// Total-variation distance between the grid law and Monte Carlo samples of
/// the same step, after merging `merge` adjacent cells along every axis.
/// Samples that land off the grid form one extra bin matched against the
/// grid's leakage.
double grid_vs_samples_tv(const GridDensity& density, const RatioSamples& samples,
                          std::size_t merge = 10);

}  // namespace dhmm::analysis
