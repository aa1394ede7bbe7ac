#include "dhmm/analysis/error_prob.hpp"

#include <algorithm>

#include "dhmm/analysis/stats.hpp"
#include "dhmm/errors.hpp"

namespace dhmm::analysis {

namespace {

// Series slot 0 is the centralized filter; slot f + 1 is algorithm f.
struct ErrorAccumulator {
  std::size_t series = 0;
  std::size_t agents = 0;
  std::size_t horizon = 0;
  std::size_t tail_start = 0;
  std::vector<std::size_t> captures;

  std::vector<std::vector<std::size_t>> errors;     // [series][agent * horizon + step - 1]
  std::vector<std::vector<std::size_t>> net_errors;  // [series][step - 1]
  std::vector<std::vector<RunningMoments>> tail;     // [series][agent]
  std::vector<RunningMoments> tail_net;
  std::vector<std::vector<RatioSamples>> samples;  // [alg][capture]

  std::vector<std::vector<double>> run_tail;
  std::vector<double> run_tail_net;

  ErrorAccumulator(std::size_t n_alg, std::size_t k, std::size_t t, std::size_t window,
                   std::vector<std::size_t> capture_steps)
      : series(n_alg + 1), agents(k), horizon(t), tail_start(t - window + 1),
        captures(std::move(capture_steps)),
        errors(series, std::vector<std::size_t>(k * t, 0)),
        net_errors(series, std::vector<std::size_t>(t, 0)),
        tail(series, std::vector<RunningMoments>(k)), tail_net(series),
        samples(n_alg, std::vector<RatioSamples>(captures.size())),
        run_tail(series, std::vector<double>(k, 0.0)), run_tail_net(series, 0.0) {
    for (auto& per_alg : samples) {
      for (std::size_t c = 0; c < captures.size(); ++c) {
        per_alg[c].step = captures[c];
        per_alg[c].w.resize(k);
      }
    }
  }

  void record(std::size_t s, std::size_t k, std::size_t i, bool err) {
    if (!err) return;
    ++errors[s][k * horizon + i - 1];
    if (i >= tail_start) run_tail[s][k] += 1.0;
  }

  void observe(const StepView& v) {
    const std::size_t i = v.step;
    const std::size_t central_err = map_estimate(v.centralized.log_belief()) != v.theta ? 1 : 0;
    for (std::size_t k = 0; k < agents; ++k) record(0, k, i, central_err != 0);
    net_errors[0][i - 1] += central_err * agents;
    if (i >= tail_start) run_tail_net[0] += static_cast<double>(central_err);

    for (std::size_t f = 0; f + 1 < series; ++f) {
      const FilterState& s = v.filters[f];
      std::size_t net = 0;
      for (std::size_t k = 0; k < agents; ++k) {
        const bool err = map_estimate(s.log_belief(k)) != v.theta;
        record(f + 1, k, i, err);
        net += err ? 1 : 0;
      }
      net_errors[f + 1][i - 1] += net;
      if (i >= tail_start) run_tail_net[f + 1] += static_cast<double>(net) / static_cast<double>(agents);
      for (std::size_t c = 0; c < captures.size(); ++c) {
        if (captures[c] != i) continue;
        auto& rs = samples[f][c];
        rs.theta.push_back(v.theta);
        for (std::size_t k = 0; k < agents; ++k) rs.w[k].push_back(s.log_ratio(k));
      }
    }

    if (i == horizon) {
      const double w = static_cast<double>(horizon - tail_start + 1);
      for (std::size_t s = 0; s < series; ++s) {
        for (std::size_t k = 0; k < agents; ++k) {
          tail[s][k].add(run_tail[s][k] / w);
          run_tail[s][k] = 0.0;
        }
        tail_net[s].add(run_tail_net[s] / w);
        run_tail_net[s] = 0.0;
      }
    }
  }

  void merge(ErrorAccumulator&& o) {
    for (std::size_t s = 0; s < series; ++s) {
      for (std::size_t j = 0; j < errors[s].size(); ++j) errors[s][j] += o.errors[s][j];
      for (std::size_t j = 0; j < horizon; ++j) net_errors[s][j] += o.net_errors[s][j];
      for (std::size_t k = 0; k < agents; ++k) tail[s][k].merge(o.tail[s][k]);
      tail_net[s].merge(o.tail_net[s]);
    }
    for (std::size_t f = 0; f < samples.size(); ++f) {
      for (std::size_t c = 0; c < captures.size(); ++c) {
        auto& dst = samples[f][c];
        auto& src = o.samples[f][c];
        dst.theta.insert(dst.theta.end(), src.theta.begin(), src.theta.end());
        for (std::size_t k = 0; k < agents; ++k) {
          dst.w[k].insert(dst.w[k].end(), src.w[k].begin(), src.w[k].end());
        }
      }
    }
  }
};

ErrorSeries build_series(const ErrorAccumulator& acc, std::size_t s, std::string label,
                         std::size_t runs, std::size_t window, bool multiclass) {
  const std::size_t k = acc.agents;
  const std::size_t t = acc.horizon;
  ErrorSeries e;
  e.label = std::move(label);
  e.agents = k;
  e.horizon = t;
  e.runs = runs;
  e.tail_window = window;
  e.multiclass = multiclass;
  const auto kk = static_cast<Eigen::Index>(k);
  const auto tt = static_cast<Eigen::Index>(t);
  e.p.resize(kk, tt);
  e.lower.resize(kk, tt);
  e.upper.resize(kk, tt);
  e.network.resize(tt);
  e.tail.resize(kk);
  e.tail_half_width.resize(kk);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t i = 0; i < t; ++i) {
      const std::size_t n_err = acc.errors[s][a * t + i];
      const auto ci = wilson_interval(n_err, runs);
      const auto ai = static_cast<Eigen::Index>(a);
      const auto ii = static_cast<Eigen::Index>(i);
      e.p(ai, ii) = static_cast<double>(n_err) / static_cast<double>(runs);
      e.lower(ai, ii) = ci.lower;
      e.upper(ai, ii) = ci.upper;
    }
    e.tail(static_cast<Eigen::Index>(a)) = acc.tail[s][a].mean();
    e.tail_half_width(static_cast<Eigen::Index>(a)) = acc.tail[s][a].half_width();
  }
  for (std::size_t i = 0; i < t; ++i) {
    e.network(static_cast<Eigen::Index>(i)) =
        static_cast<double>(acc.net_errors[s][i]) / static_cast<double>(runs * k);
  }
  e.tail_network = acc.tail_net[s].mean();
  e.tail_network_half_width = acc.tail_net[s].half_width();
  return e;
}

}  // namespace

ErrorReport estimate_error_probs(const Scenario& scenario, std::span<const AlgorithmSpec> algorithms,
                                 const MonteCarloOptions& options, const ErrorOptions& error_options) {
  const std::size_t window = error_options.tail_window;
  if (window == 0 || window > options.horizon) {
    throw ValidationError("error probability: tail window must lie in [1, horizon]");
  }
  for (std::size_t c : error_options.capture_steps) {
    if (c == 0 || c > options.horizon) throw ValidationError("error probability: capture step outside horizon");
  }
  if (!error_options.capture_steps.empty() && scenario.hypotheses() != 2) {
    throw ValidationError("error probability: log-belief ratios need H = 2");
  }
  const std::size_t k = scenario.agents();
  auto acc = run_monte_carlo<ErrorAccumulator>(scenario, algorithms, options, [&] {
    return ErrorAccumulator(algorithms.size(), k, options.horizon, window,
                            error_options.capture_steps);
  });

  const bool multiclass = scenario.hypotheses() > 2;
  ErrorReport report;
  report.centralized = build_series(acc, 0, "centralized", options.runs, window, multiclass);
  for (std::size_t f = 0; f < algorithms.size(); ++f) {
    report.algorithms.push_back(
        build_series(acc, f + 1, algorithms[f].label(), options.runs, window, multiclass));
  }
  report.samples = std::move(acc.samples);
  return report;
}

ErrorSeries estimate_error_prob(const Scenario& scenario, const AlgorithmSpec& algorithm,
                                const MonteCarloOptions& options, std::size_t tail_window) {
  ErrorOptions eo;
  eo.tail_window = tail_window;
  auto report = estimate_error_probs(scenario, std::span<const AlgorithmSpec>(&algorithm, 1), options, eo);
  return std::move(report.algorithms.front());
}

}  // namespace dhmm::analysis
