#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhmm/markov.hpp"
#include "dhmm/observation.hpp"
#include "dhmm/topology.hpp"

namespace dhmm {

enum class Variant { Centralized, Dhs, DiffusionAa, ConsensusGa, Asl };

std::string to_string(Variant variant);
/// Accepts "centralized", "dhs", "diffusion-aa", "consensus-ga", "asl".
Variant parse_variant(const std::string& name);

struct AlgorithmSpec {
  Variant variant = Variant::Dhs;
  double gamma = 1.0;
  double delta = 0.1;

  void validate() const;
  /// Short identifier used in file names and reports, e.g. "dhs-g10".
  std::string label() const;
};

/// Per-agent log-likelihoods, row-major K x H: entry [k*H + h] = log L_k(xi_k | h).
void log_likelihood_matrix(const NetworkLikelihoods& models, std::span<const double> observations,
                           std::span<double> out);

class CentralizedState {
 public:
  explicit CentralizedState(const Belief& initial);

  std::size_t hypotheses() const { return log_belief_.size(); }
  std::size_t step() const { return step_; }
  std::span<const double> log_belief() const { return log_belief_; }
  std::span<const double> log_prior() const { return log_prior_; }
  Belief belief() const { return Belief::from_log(log_belief_); }
  Belief prior() const { return Belief::from_log(log_prior_); }

 private:
  friend void centralized_step(CentralizedState&, std::span<const double>, const TransitionModel&);
  std::vector<double> log_belief_;
  std::vector<double> log_prior_;
  std::size_t step_ = 0;
};

/// Log-domain beliefs mu_k, priors eta_k and intermediates psi_k for all agents.
class FilterState {
 public:
  FilterState(std::size_t agents, const Belief& initial);
  explicit FilterState(const std::vector<Belief>& initial);

  std::size_t agents() const { return agents_; }
  std::size_t hypotheses() const { return hypotheses_; }
  std::size_t step() const { return step_; }

  std::span<const double> log_belief(std::size_t k) const { return row(log_belief_, k); }
  std::span<const double> log_prior(std::size_t k) const { return row(log_prior_, k); }
  std::span<const double> log_intermediate(std::size_t k) const { return row(log_psi_, k); }
  Belief belief(std::size_t k) const { return Belief::from_log(log_belief(k)); }
  Belief prior(std::size_t k) const { return Belief::from_log(log_prior(k)); }
  double log_ratio(std::size_t k) const;

  std::span<double> mutable_log_belief(std::size_t k) { return row(log_belief_, k); }
  std::span<double> mutable_log_prior(std::size_t k) { return row(log_prior_, k); }
  std::span<double> mutable_log_intermediate(std::size_t k) { return row(log_psi_, k); }
  void advance() { ++step_; }

 private:
  std::span<const double> row(const std::vector<double>& m, std::size_t k) const {
    return {m.data() + k * hypotheses_, hypotheses_};
  }
  std::span<double> row(std::vector<double>& m, std::size_t k) {
    return {m.data() + k * hypotheses_, hypotheses_};
  }

  std::size_t agents_ = 0;
  std::size_t hypotheses_ = 0;
  std::vector<double> log_belief_;
  std::vector<double> log_prior_;
  std::vector<double> log_psi_;
  std::size_t step_ = 0;
};

// Every step below advances the state in place. The overloads taking a
// log-likelihood matrix expect the layout produced by log_likelihood_matrix.
// Throws ImpossibleObservationError when an agent's belief loses all mass.

void centralized_step(CentralizedState& state, std::span<const double> loglik,
                      const TransitionModel& transition);
void centralized_step(CentralizedState& state, std::span<const double> observations,
                      const NetworkLikelihoods& models, const TransitionModel& transition);

void dhs_step(FilterState& state, std::span<const double> loglik, const TransitionModel& transition,
              const CombinationMatrix& a, double gamma);
void dhs_step(FilterState& state, std::span<const double> observations,
              const NetworkLikelihoods& models, const TransitionModel& transition,
              const CombinationMatrix& a, double gamma);

void diffusion_aa_step(FilterState& state, std::span<const double> loglik,
                       const TransitionModel& transition, const CombinationMatrix& a, double gamma);
void diffusion_aa_step(FilterState& state, std::span<const double> observations,
                       const NetworkLikelihoods& models, const TransitionModel& transition,
                       const CombinationMatrix& a, double gamma);

/// mu_k ∝ psi_k^{a_kk} prod_{l != k} eta_l^{a_lk}. When a_kk = 0 the own
/// update drops out entirely.
void consensus_ga_step(FilterState& state, std::span<const double> loglik,
                       const TransitionModel& transition, const CombinationMatrix& a, double gamma);
void consensus_ga_step(FilterState& state, std::span<const double> observations,
                       const NetworkLikelihoods& models, const TransitionModel& transition,
                       const CombinationMatrix& a, double gamma);

/// No prediction step; the stored prior is the previous belief.
void asl_step(FilterState& state, std::span<const double> loglik, const CombinationMatrix& a,
              double delta);
void asl_step(FilterState& state, std::span<const double> observations,
              const NetworkLikelihoods& models, const CombinationMatrix& a, double delta);

/// Dispatches on spec.variant; Centralized is rejected here.
void filter_step(const AlgorithmSpec& spec, FilterState& state, std::span<const double> loglik,
                 const TransitionModel& transition, const CombinationMatrix& a);

/// Argmax with ties going to the smaller index.
std::size_t map_estimate(const Belief& belief);
std::size_t map_estimate(std::span<const double> log_belief);

enum class RatioVariant { Diffusion, Consensus };

/// chi = log (T(1|0) + T(1|1) e^w) / (T(0|0) + T(0|1) e^w).
double predicted_log_ratio(double w_prev, const TransitionModel& transition);

/// Binary log-belief-ratio recursion. nu = gamma * LLR.
/// Diffusion: w = A^T (nu + chi). Consensus: w = nu + A^T chi.
Eigen::VectorXd log_belief_ratio_step(const Eigen::VectorXd& w_prev,
                                      std::span<const double> observations,
                                      const NetworkLikelihoods& models,
                                      const TransitionModel& transition,
                                      const CombinationMatrix& a, double gamma,
                                      RatioVariant variant);

/// Default grid: 2001 points over the truncation interval, or over the
/// means +- 6 sigma for the Gaussian. Categorical models scan their symbols.
std::vector<double> prediction_grid(const LikelihoodModel& model, std::size_t points = 2001);

/// argmax over `grid` of sum_theta L(xi|theta) prior(theta), ties toward smaller xi.
double predict_observation(const Belief& prior, const LikelihoodModel& model,
                           std::span<const double> grid);
double predict_observation(const Belief& prior, const LikelihoodModel& model);

}  // namespace dhmm
