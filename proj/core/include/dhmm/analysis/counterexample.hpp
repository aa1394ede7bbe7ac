#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "dhmm/analysis/stats.hpp"

namespace dhmm::analysis {

struct CounterexampleOptions {
  std::size_t runs = 100000;
  /// Step at which w is sampled; any step >= 1 is stationary here.
  std::size_t step = 3;
  std::uint64_t seed = 7;
  std::size_t threads = 0;
};

/// Three agents on the path 0 - 1 - 2 with combination columns
/// [2/3,1/3,0], [1/3,1/3,1/3], [0,1/3,2/3], a memoryless BSC(0.5) state,
/// N(-1,1) / N(+1,1) observations and gamma = 1. The beliefs of the end
/// agents and the middle agent settle on different laws.
struct CounterexampleReport {
  double nu_variance = 0.0;
  std::array<double, 3> analytic_variance{};
  std::array<double, 3> mc_variance{};  // within-class, pooled over theta
  std::array<double, 3> mc_mean{};  // unconditional
  double analytic_ratio = 0.0;  // Var(w_middle) / Var(w_end)
  double mc_ratio = 0.0;
  std::array<double, 3> analytic_error{};
  std::array<double, 3> mc_error{};
  std::array<Interval, 3> mc_error_ci{};
  /// Largest class-conditional KS distance between w of agents 0 and 1.
  double ks_end_middle = 0.0;
  std::size_t samples = 0;

  bool ratio_ok = false;
  bool variances_ok = false;  // every MC variance within 5% of analytic
  bool error_order_ok = false;  // middle error below end error beyond CIs
  bool ks_ok = false;           // KS > 0.05
  bool passed() const { return ratio_ok && variances_ok && error_order_ok && ks_ok; }
};

CounterexampleReport three_agent_counterexample(const CounterexampleOptions& options = {});

}  // namespace dhmm::analysis
