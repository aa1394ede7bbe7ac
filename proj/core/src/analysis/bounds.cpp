#include "dhmm/analysis/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "dhmm/errors.hpp"
#include "dhmm/numeric.hpp"

namespace dhmm::analysis {

BoundReport asymptotic_risk_bounds(double kappa, double rho2, std::size_t agents, double gamma,
                            double c_l) {
  if (!(gamma > 0.0)) throw ValidationError("bounds: gamma must be > 0");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw ValidationError("bounds: kappa must lie in [0,1]");
  if (!(c_l >= 0.0)) throw ValidationError("bounds: C_L must be nonnegative");
  if (agents == 0) throw ValidationError("bounds: need at least one agent");
  BoundReport r;
  r.kappa = kappa;
  r.rho2 = rho2;
  r.agents = agents;
  r.gamma = gamma;
  r.c_l = c_l;
  r.lambda = std::max(std::abs(1.0 - static_cast<double>(agents) / gamma), rho2);
  if (kappa >= 1.0) {
    r.finite = false;
    r.posterior = kInf;
    r.prior = kInf;
    return r;
  }
  r.posterior = 2.0 * std::sqrt(static_cast<double>(agents)) * gamma * r.lambda * c_l / (1.0 - kappa);
  r.prior = kappa * r.posterior;
  return r;
}

BoundReport asymptotic_risk_bounds(const TransitionModel& transition, const CombinationMatrix& a,
                            double gamma, double c_l) {
  return asymptotic_risk_bounds(dobrushin_coefficient(transition), second_eigenvalue_modulus(a),
                         a.agents(), gamma, c_l);
}

}  // namespace dhmm::analysis
