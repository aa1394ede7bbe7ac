#include "dhmm/analysis/monte_carlo.hpp"

#include <algorithm>

#include "dhmm/errors.hpp"
#include "dhmm/rng.hpp"

namespace dhmm::analysis {

Scenario Scenario::make(TransitionModel transition, NetworkLikelihoods likelihoods,
                        CombinationMatrix combination) {
  const std::size_t h = transition.size();
  return Scenario{std::move(transition), std::move(likelihoods), std::move(combination),
                  Belief::uniform(h), Belief::uniform(h)};
}

void Scenario::validate() const {
  const std::size_t h = transition.size();
  if (likelihoods.hypotheses() != h || state_prior.size() != h || initial_belief.size() != h) {
    throw DimensionError("scenario: hypothesis counts disagree");
  }
  if (combination.agents() != likelihoods.agents()) {
    throw DimensionError("scenario: combination matrix and likelihoods disagree on K");
  }
  initial_belief.require_positive();
}

void MonteCarloOptions::validate() const {
  if (runs == 0) throw ValidationError("monte carlo: runs must be >= 1");
  if (horizon == 0) throw ValidationError("monte carlo: horizon must be >= 1");
  if (block_size == 0) throw ValidationError("monte carlo: block size must be >= 1");
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace {

// Every agent holds the centralized posterior.
void mirror_centralized(const CentralizedState& central, FilterState& state) {
  for (std::size_t a = 0; a < state.agents(); ++a) {
    const auto mu = central.log_belief();
    const auto eta = central.log_prior();
    std::copy(mu.begin(), mu.end(), state.mutable_log_belief(a).begin());
    std::copy(mu.begin(), mu.end(), state.mutable_log_intermediate(a).begin());
    std::copy(eta.begin(), eta.end(), state.mutable_log_prior(a).begin());
  }
  state.advance();
}

}  // namespace

void simulate_run(const Scenario& scenario, std::span<const AlgorithmSpec> algorithms,
                  std::uint64_t seed, std::size_t run, std::size_t horizon,
                  const StepVisitor& visit) {
  const std::size_t k = scenario.agents();
  const std::size_t h = scenario.hypotheses();
  Rng trajectory_rng = make_rng(derive_seed(seed, {run, 0}));
  const auto theta = sample_trajectory(scenario.transition, scenario.state_prior, horizon + 1,
                                       trajectory_rng);
  std::vector<Rng> agent_rng;
  agent_rng.reserve(k);
  for (std::size_t a = 0; a < k; ++a) agent_rng.push_back(make_rng(derive_seed(seed, {run, 1, a})));

  CentralizedState central(scenario.initial_belief);
  std::vector<FilterState> filters(algorithms.size(), FilterState(k, scenario.initial_belief));
  std::vector<double> obs(k);
  std::vector<double> ll(k * h);
  for (std::size_t i = 1; i <= horizon; ++i) {
    for (std::size_t a = 0; a < k; ++a) obs[a] = scenario.likelihoods[a].sample(theta[i], agent_rng[a]);
    log_likelihood_matrix(scenario.likelihoods, obs, ll);
    centralized_step(central, ll, scenario.transition);
    for (std::size_t f = 0; f < algorithms.size(); ++f) {
      if (algorithms[f].variant == Variant::Centralized) {
        mirror_centralized(central, filters[f]);
      } else {
        filter_step(algorithms[f], filters[f], ll, scenario.transition, scenario.combination);
      }
    }
    visit(StepView{run, i, horizon, theta[i], obs, central, filters});
  }
}

}  // namespace dhmm::analysis
