#include "dhmm/analysis/risk.hpp"

#include <algorithm>

#include "dhmm/analysis/stats.hpp"
#include "dhmm/errors.hpp"

namespace dhmm::analysis {

namespace {

struct RiskAccumulator {
  std::size_t algorithms = 0;
  std::size_t agents = 0;
  std::size_t horizon = 0;
  std::size_t tail_start = 0;  // first 1-based step inside the tail window

  // Indexed [alg][agent * horizon + step - 1].
  std::vector<std::vector<RunningMoments>> post;
  std::vector<std::vector<RunningMoments>> prior;
  // Network averages per step, [alg][step - 1].
  std::vector<std::vector<RunningMoments>> net_post;
  std::vector<std::vector<RunningMoments>> net_prior;
  // Per-run tail means: [alg][agent] and [alg] for the network.
  std::vector<std::vector<RunningMoments>> tail_post;
  std::vector<RunningMoments> tail_net_post;
  std::vector<RunningMoments> tail_net_prior;

  // Scratch for the run in progress.
  std::vector<std::vector<double>> run_tail;
  std::vector<double> run_tail_net;
  std::vector<double> run_tail_net_prior;

  RiskAccumulator(std::size_t n_alg, std::size_t k, std::size_t t, std::size_t window)
      : algorithms(n_alg), agents(k), horizon(t), tail_start(t - window + 1),
        post(n_alg, std::vector<RunningMoments>(k * t)),
        prior(n_alg, std::vector<RunningMoments>(k * t)),
        net_post(n_alg, std::vector<RunningMoments>(t)),
        net_prior(n_alg, std::vector<RunningMoments>(t)),
        tail_post(n_alg, std::vector<RunningMoments>(k)),
        tail_net_post(n_alg), tail_net_prior(n_alg),
        run_tail(n_alg, std::vector<double>(k, 0.0)), run_tail_net(n_alg, 0.0),
        run_tail_net_prior(n_alg, 0.0) {}

  void observe(const StepView& v) {
    const std::size_t i = v.step;
    const bool in_tail = i >= tail_start;
    const double inv_k = 1.0 / static_cast<double>(agents);
    const auto mu_c = v.centralized.log_belief();
    const auto eta_c = v.centralized.log_prior();
    for (std::size_t f = 0; f < algorithms; ++f) {
      const FilterState& s = v.filters[f];
      double net = 0.0;
      double net_p = 0.0;
      for (std::size_t k = 0; k < agents; ++k) {
        const double jp = kl_divergence_log(mu_c, s.log_belief(k));
        const double jq = kl_divergence_log(eta_c, s.log_prior(k));
        post[f][k * horizon + i - 1].add(jp);
        prior[f][k * horizon + i - 1].add(jq);
        net += jp;
        net_p += jq;
        if (in_tail) run_tail[f][k] += jp;
      }
      net_post[f][i - 1].add(net * inv_k);
      net_prior[f][i - 1].add(net_p * inv_k);
      if (in_tail) {
        run_tail_net[f] += net * inv_k;
        run_tail_net_prior[f] += net_p * inv_k;
      }
      if (i == horizon) {
        const double w = static_cast<double>(horizon - tail_start + 1);
        for (std::size_t k = 0; k < agents; ++k) {
          tail_post[f][k].add(run_tail[f][k] / w);
          run_tail[f][k] = 0.0;
        }
        tail_net_post[f].add(run_tail_net[f] / w);
        tail_net_prior[f].add(run_tail_net_prior[f] / w);
        run_tail_net[f] = 0.0;
        run_tail_net_prior[f] = 0.0;
      }
    }
  }

  void merge(RiskAccumulator&& o) {
    for (std::size_t f = 0; f < algorithms; ++f) {
      for (std::size_t j = 0; j < post[f].size(); ++j) {
        post[f][j].merge(o.post[f][j]);
        prior[f][j].merge(o.prior[f][j]);
      }
      for (std::size_t j = 0; j < horizon; ++j) {
        net_post[f][j].merge(o.net_post[f][j]);
        net_prior[f][j].merge(o.net_prior[f][j]);
      }
      for (std::size_t k = 0; k < agents; ++k) tail_post[f][k].merge(o.tail_post[f][k]);
      tail_net_post[f].merge(o.tail_net_post[f]);
      tail_net_prior[f].merge(o.tail_net_prior[f]);
    }
  }
};

}  // namespace

std::vector<RiskSeries> estimate_risks(const Scenario& scenario,
                                       std::span<const AlgorithmSpec> algorithms,
                                       const MonteCarloOptions& options, std::size_t tail_window) {
  if (tail_window == 0 || tail_window > options.horizon) {
    throw ValidationError("risk: tail window must lie in [1, horizon]");
  }
  const std::size_t k = scenario.agents();
  const std::size_t t = options.horizon;
  auto acc = run_monte_carlo<RiskAccumulator>(scenario, algorithms, options, [&] {
    return RiskAccumulator(algorithms.size(), k, t, tail_window);
  });

  std::vector<RiskSeries> out;
  for (std::size_t f = 0; f < algorithms.size(); ++f) {
    RiskSeries r;
    r.label = algorithms[f].label();
    r.agents = k;
    r.horizon = t;
    r.runs = options.runs;
    r.tail_window = tail_window;
    r.posterior.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t));
    r.posterior_se.resizeLike(r.posterior);
    r.prior.resizeLike(r.posterior);
    r.prior_se.resizeLike(r.posterior);
    r.network_posterior.resize(static_cast<Eigen::Index>(t));
    r.network_prior.resize(static_cast<Eigen::Index>(t));
    r.tail_posterior.resize(static_cast<Eigen::Index>(k));
    r.tail_posterior_se.resize(static_cast<Eigen::Index>(k));
    r.tail_prior = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t i = 0; i < t; ++i) {
        const auto ai = static_cast<Eigen::Index>(a);
        const auto ii = static_cast<Eigen::Index>(i);
        r.posterior(ai, ii) = acc.post[f][a * t + i].mean();
        r.posterior_se(ai, ii) = acc.post[f][a * t + i].standard_error();
        r.prior(ai, ii) = acc.prior[f][a * t + i].mean();
        r.prior_se(ai, ii) = acc.prior[f][a * t + i].standard_error();
        if (i + 1 >= acc.tail_start) r.tail_prior(ai) += r.prior(ai, ii) / static_cast<double>(tail_window);
      }
      r.tail_posterior(static_cast<Eigen::Index>(a)) = acc.tail_post[f][a].mean();
      r.tail_posterior_se(static_cast<Eigen::Index>(a)) = acc.tail_post[f][a].standard_error();
    }
    for (std::size_t i = 0; i < t; ++i) {
      r.network_posterior(static_cast<Eigen::Index>(i)) = acc.net_post[f][i].mean();
      r.network_prior(static_cast<Eigen::Index>(i)) = acc.net_prior[f][i].mean();
    }
    r.tail_network_posterior = acc.tail_net_post[f].mean();
    r.tail_network_posterior_se = acc.tail_net_post[f].standard_error();
    r.tail_network_prior = acc.tail_net_prior[f].mean();
    r.tail_network_prior_se = acc.tail_net_prior[f].standard_error();
    out.push_back(std::move(r));
  }
  return out;
}

RiskSeries estimate_risks(const Scenario& scenario, const AlgorithmSpec& algorithm,
                          const MonteCarloOptions& options, std::size_t tail_window) {
  return estimate_risks(scenario, std::span<const AlgorithmSpec>(&algorithm, 1), options,
                        tail_window).front();
}

}  // namespace dhmm::analysis
