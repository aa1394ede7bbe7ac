#pragma once

#include <cstddef>

#include "dhmm/markov.hpp"
#include "dhmm/topology.hpp"

namespace dhmm::analysis {

struct BoundReport {
  double kappa = 0.0;
  double rho2 = 0.0;
  double lambda = 0.0;
  double c_l = 0.0;
  std::size_t agents = 0;
  double gamma = 0.0;
  /// 2 sqrt(K) gamma lambda C_L / (1 - kappa); +inf when kappa = 1.
  double posterior = 0.0;
  /// kappa * posterior.
  double prior = 0.0;
  bool finite = true;
};

/// Asymptotic bounds on the posterior and prior risks.
BoundReport asymptotic_risk_bounds(const TransitionModel& transition, const CombinationMatrix& a,
                            double gamma, double c_l);

/// Same formula from precomputed ingredients.
BoundReport asymptotic_risk_bounds(double kappa, double rho2, std::size_t agents, double gamma,
                            double c_l);

}  // namespace dhmm::analysis
