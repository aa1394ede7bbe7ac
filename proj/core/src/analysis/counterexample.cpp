#include "dhmm/analysis/counterexample.hpp"

#include <cmath>
#include <vector>

#include "dhmm/analysis/error_prob.hpp"
#include "dhmm/analysis/monte_carlo.hpp"
#include "dhmm/numeric.hpp"

namespace dhmm::analysis {

CounterexampleReport three_agent_counterexample(const CounterexampleOptions& options) {
  Eigen::MatrixXd a(3, 3);
  a << 2.0 / 3.0, 1.0 / 3.0, 0.0,  //
      1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0,  //
      0.0, 1.0 / 3.0, 2.0 / 3.0;
  Scenario scenario = Scenario::make(
      TransitionModel::binary_symmetric(0.5),
      NetworkLikelihoods::replicate(LikelihoodModel::gaussian({-1.0, 1.0}, 1.0), 3),
      CombinationMatrix(a, Graph::path(3)));

  CounterexampleReport r;
  // nu = 2 xi; Var(nu | theta) = 4, E(nu | theta) = -2 or +2.
  r.nu_variance = 4.0;
  const double mean_abs = 2.0;
  for (int k = 0; k < 3; ++k) {
    double s = 0.0;
    for (int l = 0; l < 3; ++l) s += a(l, k) * a(l, k);
    r.analytic_variance[static_cast<std::size_t>(k)] = s * r.nu_variance;
    r.analytic_error[static_cast<std::size_t>(k)] =
        normal_cdf(-mean_abs / std::sqrt(r.analytic_variance[static_cast<std::size_t>(k)]));
  }
  r.analytic_ratio = r.analytic_variance[1] / r.analytic_variance[0];

  MonteCarloOptions mc;
  mc.runs = options.runs;
  mc.horizon = options.step;
  mc.seed = options.seed;
  mc.threads = options.threads;
  ErrorOptions eo;
  eo.tail_window = 1;
  eo.capture_steps = {options.step};
  const AlgorithmSpec dhs{Variant::Dhs, 1.0, 0.1};
  const auto report = estimate_error_probs(scenario, std::span<const AlgorithmSpec>(&dhs, 1), mc, eo);
  const RatioSamples& s = report.samples.front().front();
  r.samples = s.theta.size();

  std::array<std::array<std::vector<double>, 2>, 3> by_class;
  for (std::size_t k = 0; k < 3; ++k) {
    RunningMoments pooled_mean;
    std::array<RunningMoments, 2> cls;
    for (std::size_t run = 0; run < s.theta.size(); ++run) {
      const double w = s.w[k][run];
      cls[s.theta[run]].add(w);
      by_class[k][s.theta[run]].push_back(w);
      pooled_mean.add(w);
    }
    const double n0 = static_cast<double>(cls[0].count());
    const double n1 = static_cast<double>(cls[1].count());
    r.mc_variance[k] = (cls[0].variance() * (n0 - 1.0) + cls[1].variance() * (n1 - 1.0)) / (n0 + n1 - 2.0);
    r.mc_mean[k] = pooled_mean.mean();
    const auto col = static_cast<Eigen::Index>(options.step - 1);
    const auto& series = report.algorithms.front();
    r.mc_error[k] = series.p(static_cast<Eigen::Index>(k), col);
    r.mc_error_ci[k] = {series.lower(static_cast<Eigen::Index>(k), col),
                        series.upper(static_cast<Eigen::Index>(k), col)};
  }
  r.mc_ratio = r.mc_variance[1] / r.mc_variance[0];
  for (std::size_t t = 0; t < 2; ++t) {
    r.ks_end_middle = std::max(r.ks_end_middle, ks_statistic(by_class[0][t], by_class[1][t]));
  }

  r.ratio_ok = std::abs(r.analytic_ratio - 0.6) < 1e-12;
  r.variances_ok = true;
  for (std::size_t k = 0; k < 3; ++k) {
    r.variances_ok = r.variances_ok &&
                     std::abs(r.mc_variance[k] - r.analytic_variance[k]) <= 0.05 * r.analytic_variance[k];
  }
  r.error_order_ok = r.mc_error_ci[1].upper < r.mc_error_ci[0].lower &&
                     r.mc_error_ci[1].upper < r.mc_error_ci[2].lower;
  r.ks_ok = r.ks_end_middle > 0.05;
  return r;
}

}  // namespace dhmm::analysis
