#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "dhmm/filters.hpp"
#include "dhmm/markov.hpp"
#include "dhmm/observation.hpp"
#include "dhmm/topology.hpp"

namespace dhmm::analysis {

struct Scenario {
  TransitionModel transition;
  NetworkLikelihoods likelihoods;
  CombinationMatrix combination;
  /// Law of theta_0.
  Belief state_prior;
  /// mu_{k,0}, shared by every agent and by the centralized filter.
  Belief initial_belief;

  /// Uniform state prior and initial beliefs.
  static Scenario make(TransitionModel transition, NetworkLikelihoods likelihoods,
                       CombinationMatrix combination);

  std::size_t agents() const { return likelihoods.agents(); }
  std::size_t hypotheses() const { return transition.size(); }
  void validate() const;
};

struct MonteCarloOptions {
  std::size_t runs = 1000;
  std::size_t horizon = 200;
  std::uint64_t seed = 1;
  /// 0 picks std::thread::hardware_concurrency().
  std::size_t threads = 0;
  /// Runs per work item. Results are merged block by block in index order.
  std::size_t block_size = 64;

  void validate() const;
};

/// What a visitor sees after step `step` (1-based) of run `run`.
struct StepView {
  std::size_t run = 0;
  std::size_t step = 0;
  std::size_t horizon = 0;
  std::size_t theta = 0;
  std::span<const double> observations;
  const CentralizedState& centralized;
  /// One state per requested algorithm, in request order.
  std::span<const FilterState> filters;
};

using StepVisitor = std::function<void(const StepView&)>;

/// One run: theta_0 from the state prior, then horizon transitions, each
/// followed by one observation per agent and one step of every filter.
/// The trajectory and each agent's observations use separate RNG streams
/// derived from (seed, run).
void simulate_run(const Scenario& scenario, std::span<const AlgorithmSpec> algorithms,
                  std::uint64_t seed, std::size_t run, std::size_t horizon,
                  const StepVisitor& visit);

std::size_t resolve_threads(std::size_t requested);

/// Runs options.runs independent simulations. Each block of runs feeds a
/// fresh accumulator from make(); blocks are merged into the result in
/// block order, so the outcome does not depend on the thread count.
/// Acc must provide observe(const StepView&) and merge(Acc&&).
template <class Acc, class MakeAcc>
Acc run_monte_carlo(const Scenario& scenario, std::span<const AlgorithmSpec> algorithms,
                    const MonteCarloOptions& options, MakeAcc make) {
  options.validate();
  scenario.validate();
  for (const auto& spec : algorithms) spec.validate();
  const std::size_t blocks = (options.runs + options.block_size - 1) / options.block_size;
  std::vector<Acc> partial;
  partial.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) partial.push_back(make());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      try {
        Acc& acc = partial[b];
        const std::size_t first = b * options.block_size;
        const std::size_t last = std::min(options.runs, first + options.block_size);
        for (std::size_t run = first; run < last; ++run) {
          simulate_run(scenario, algorithms, options.seed, run, options.horizon,
                       [&](const StepView& v) { acc.observe(v); });
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(blocks);
        return;
      }
    }
  };
  const std::size_t threads = std::min(resolve_threads(options.threads), blocks);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  Acc total = make();
  for (auto& p : partial) total.merge(std::move(p));
  return total;
}

}  // namespace dhmm::analysis
