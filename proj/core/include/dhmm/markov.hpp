#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dhmm/rng.hpp"

namespace dhmm {

/// Probability vector over the hypotheses 0..H-1.
class Belief {
 public:
  /// Validates entries in [0,1] and a unit sum within 1e-12.
  explicit Belief(std::vector<double> probs);

  static Belief uniform(std::size_t hypotheses);
  static Belief point_mass(std::size_t hypotheses, std::size_t index);
  /// Exponentiates and renormalizes a log-domain vector.
  static Belief from_log(std::span<const double> log_probs);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  bool strictly_positive() const;

  /// Throws ValidationError unless every entry is > 0 (initial-prior condition).
  const Belief& require_positive() const;

 private:
  std::vector<double> probs_;
};

enum class Orientation { ColumnStochastic, RowStochastic };

/// Markov kernel stored as kernel(next, prev) = P(theta_i = next | theta_{i-1} = prev),
/// so every column sums to one.
class TransitionModel {
 public:
  explicit TransitionModel(Eigen::MatrixXd kernel,
                           Orientation orientation = Orientation::ColumnStochastic);

  static TransitionModel binary_symmetric(double alpha);
  static TransitionModel identity(std::size_t hypotheses);
  /// Every column equals `stationary`; the kernel forgets its input in one step.
  static TransitionModel memoryless(const Belief& stationary);

  std::size_t size() const { return static_cast<std::size_t>(kernel_.rows()); }
  double operator()(std::size_t next, std::size_t prev) const { return kernel_(next, prev); }
  const Eigen::MatrixXd& kernel() const { return kernel_; }
  /// Entrywise log of the kernel (-inf where the kernel is zero).
  const Eigen::MatrixXd& log_kernel() const { return log_kernel_; }

  /// Kernel of "apply `inner`, then `this`".
  TransitionModel after(const TransitionModel& inner) const;
  TransitionModel power(std::size_t n) const;

  /// True when some power n <= H^2 has all-positive entries.
  bool irreducible_aperiodic() const;

 private:
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXd log_kernel_;
};

/// Chapman-Kolmogorov prediction: out[next] = sum_prev T(next|prev) belief[prev].
Belief evolve(const Belief& belief, const TransitionModel& model);

/// Log-domain Chapman-Kolmogorov step; exact for kernels with zero entries.
void evolve_log(std::span<const double> log_belief, const TransitionModel& model,
                std::span<double> out);

/// max over column pairs of half the L1 distance between the columns.
double dobrushin_coefficient(const TransitionModel& model);

/// Stationary distribution by power iteration (cap 1e6 iterations, residual 1e-12).
Belief perron_vector(const TransitionModel& model, std::size_t max_iterations = 1'000'000,
                     double tolerance = 1e-12);

/// theta_0 ~ initial, theta_i ~ T(.|theta_{i-1}); returns `horizon` states.
std::vector<std::size_t> sample_trajectory(const TransitionModel& model, const Belief& initial,
                                           std::size_t horizon, Rng& rng);

/// KL(p||q) in nats with 0 log 0 = 0. Returns +inf when q has zero mass where
/// p does not.
double kl_divergence(const Belief& p, const Belief& q);
double kl_divergence_log(std::span<const double> log_p, std::span<const double> log_q);

double total_variation(const Belief& p, const Belief& q);

}  // namespace dhmm
