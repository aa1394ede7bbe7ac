#include <benchmark/benchmark.h>

#include "dhmm/analysis/density.hpp"
#include "dhmm/analysis/risk.hpp"
#include "dhmm/filters.hpp"

using namespace dhmm;

namespace {

struct Setup {
  explicit Setup(std::size_t k)
      : transition(TransitionModel::binary_symmetric(0.1)),
        likelihoods(NetworkLikelihoods::replicate(LikelihoodModel::truncated_gaussian({0.0, 1.5}, 1.0, -1.0, 2.0), k)),
        combination(metropolis_weights(Graph::path(k))) {}
  TransitionModel transition;
  NetworkLikelihoods likelihoods;
  CombinationMatrix combination;
};

void BM_DhsStep(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const Setup s(k);
  FilterState filter(k, Belief::uniform(2));
  Rng rng = make_rng(1);
  std::vector<double> obs(k), ll(2 * k);
  for (auto& o : obs) o = s.likelihoods[0].sample(1, rng);
  log_likelihood_matrix(s.likelihoods, obs, ll);
  for (auto _ : state) {
    dhs_step(filter, ll, s.transition, s.combination, static_cast<double>(k));
    benchmark::DoNotOptimize(filter.log_belief(0).data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(k));
}
BENCHMARK(BM_DhsStep)->Arg(10)->Arg(70);

void BM_ConsensusDensityStep(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto net = NetworkLikelihoods::replicate(LikelihoodModel::gaussian({-1.0, 1.0}, 1.0), k);
  const auto a = k == 1 ? CombinationMatrix::identity(1) : CombinationMatrix::uniform(k);
  analysis::DensityOptions o;
  o.steps = 5;
  o.pilot_runs = 500;
  for (auto _ : state) {
    const auto d = analysis::density_evolution_consensus(TransitionModel::binary_symmetric(0.1), net, a, 1.0, o);
    benchmark::DoNotOptimize(d.error.data());
  }
}
BENCHMARK(BM_ConsensusDensityStep)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_RiskMonteCarlo(benchmark::State& state) {
  const Setup s(10);
  const auto scenario = analysis::Scenario::make(s.transition, s.likelihoods, s.combination);
  analysis::MonteCarloOptions mc;
  mc.runs = 64;
  mc.horizon = 100;
  mc.threads = 1;
  for (auto _ : state) {
    const auto r = analysis::estimate_risks(scenario, AlgorithmSpec{Variant::Dhs, 10.0, 0.1}, mc, 20);
    benchmark::DoNotOptimize(r.tail_network_posterior);
  }
}
BENCHMARK(BM_RiskMonteCarlo)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
