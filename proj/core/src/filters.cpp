#include "dhmm/filters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dhmm/errors.hpp"
#include "dhmm/numeric.hpp"

namespace dhmm {

namespace {

constexpr double kPredictTieTol = 1e-12;

void check_loglik(std::span<const double> loglik, std::size_t agents, std::size_t hypotheses) {
  if (loglik.size() != agents * hypotheses) {
    throw DimensionError("filter: log-likelihood matrix has wrong size");
  }
}

void check_network(const FilterState& state, const CombinationMatrix& a) {
  if (a.agents() != state.agents()) throw DimensionError("filter: combination matrix size mismatch");
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("filter: gamma must be > 0");
}

void normalize_agent(std::span<double> row, std::size_t k) {
  try {
    normalize_log(row);
  } catch (const ImpossibleObservationError&) {
    throw ImpossibleObservationError("filter: agent " + std::to_string(k) +
                                     " assigns zero likelihood to every hypothesis");
  }
}

// psi_k = gamma * loglik_k + eta_k, normalized; eta_k = evolve(mu_k).
void evolve_and_adapt(FilterState& state, std::span<const double> loglik,
                      const TransitionModel& transition, double gamma) {
  const std::size_t h = state.hypotheses();
  if (transition.size() != h) throw DimensionError("filter: transition size mismatch");
  for (std::size_t k = 0; k < state.agents(); ++k) {
    auto eta = state.mutable_log_prior(k);
    evolve_log(state.log_belief(k), transition, eta);
    auto psi = state.mutable_log_intermediate(k);
    for (std::size_t t = 0; t < h; ++t) psi[t] = gamma * loglik[k * h + t] + eta[t];
    normalize_agent(psi, k);
  }
}

void geometric_combine(FilterState& state, const CombinationMatrix& a) {
  const std::size_t h = state.hypotheses();
  for (std::size_t k = 0; k < state.agents(); ++k) {
    auto mu = state.mutable_log_belief(k);
    std::fill(mu.begin(), mu.end(), 0.0);
    for (std::size_t l = 0; l < state.agents(); ++l) {
      const double w = a(l, k);
      if (w == 0.0) continue;
      const auto psi = state.log_intermediate(l);
      for (std::size_t t = 0; t < h; ++t) mu[t] += w * psi[t];
    }
    normalize_agent(mu, k);
  }
}

}  // namespace

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::Centralized:
      return "centralized";
    case Variant::Dhs:
      return "dhs";
    case Variant::DiffusionAa:
      return "diffusion-aa";
    case Variant::ConsensusGa:
      return "consensus-ga";
    case Variant::Asl:
      return "asl";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::Centralized, Variant::Dhs, Variant::DiffusionAa, Variant::ConsensusGa,
                    Variant::Asl}) {
    if (to_string(v) == name) return v;
  }
  throw ValidationError("algorithm: unknown variant '" + name + "'");
}

void AlgorithmSpec::validate() const {
  if (variant == Variant::Asl) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("algorithm: asl delta must be in (0,1)");
  } else if (variant != Variant::Centralized) {
    check_gamma(gamma);
  }
}

std::string AlgorithmSpec::label() const {
  std::ostringstream os;
  os << to_string(variant);
  if (variant == Variant::Asl) {
    os << "-d" << delta;
  } else if (variant != Variant::Centralized) {
    os << "-g" << gamma;
  }
  return os.str();
}

void log_likelihood_matrix(const NetworkLikelihoods& models, std::span<const double> observations,
                           std::span<double> out) {
  const std::size_t k = models.agents();
  const std::size_t h = models.hypotheses();
  if (observations.size() != k) throw DimensionError("filter: expected one observation per agent");
  if (out.size() != k * h) throw DimensionError("filter: log-likelihood buffer has wrong size");
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t t = 0; t < h; ++t) out[a * h + t] = models[a].log_likelihood(observations[a], t);
}

CentralizedState::CentralizedState(const Belief& initial) {
  initial.require_positive();
  log_belief_.resize(initial.size());
  for (std::size_t t = 0; t < initial.size(); ++t) log_belief_[t] = std::log(initial[t]);
  log_prior_ = log_belief_;
}

void centralized_step(CentralizedState& state, std::span<const double> loglik,
                      const TransitionModel& transition) {
  const std::size_t h = state.hypotheses();
  if (transition.size() != h) throw DimensionError("filter: transition size mismatch");
  if (loglik.empty() || loglik.size() % h != 0) {
    throw DimensionError("filter: log-likelihood matrix has wrong size");
  }
  const std::size_t agents = loglik.size() / h;
  evolve_log(state.log_belief_, transition, state.log_prior_);
  for (std::size_t t = 0; t < h; ++t) {
    double s = state.log_prior_[t];
    for (std::size_t k = 0; k < agents; ++k) s += loglik[k * h + t];
    state.log_belief_[t] = s;
  }
  try {
    normalize_log(state.log_belief_);
  } catch (const ImpossibleObservationError&) {
    throw ImpossibleObservationError(
        "centralized filter: observations are impossible under every hypothesis");
  }
  ++state.step_;
}

void centralized_step(CentralizedState& state, std::span<const double> observations,
                      const NetworkLikelihoods& models, const TransitionModel& transition) {
  std::vector<double> ll(models.agents() * models.hypotheses());
  log_likelihood_matrix(models, observations, ll);
  centralized_step(state, ll, transition);
}

FilterState::FilterState(std::size_t agents, const Belief& initial)
    : FilterState(std::vector<Belief>(agents, initial)) {}

FilterState::FilterState(const std::vector<Belief>& initial) {
  if (initial.empty()) throw ValidationError("filter: need at least one agent");
  agents_ = initial.size();
  hypotheses_ = initial.front().size();
  log_belief_.resize(agents_ * hypotheses_);
  for (std::size_t k = 0; k < agents_; ++k) {
    if (initial[k].size() != hypotheses_) throw DimensionError("filter: initial beliefs differ in size");
    initial[k].require_positive();
    for (std::size_t t = 0; t < hypotheses_; ++t) {
      log_belief_[k * hypotheses_ + t] = std::log(initial[k][t]);
    }
  }
  log_prior_ = log_belief_;
  log_psi_ = log_belief_;
}

double FilterState::log_ratio(std::size_t k) const {
  if (hypotheses_ != 2) throw ValidationError("filter: log-belief ratio needs H = 2");
  const auto mu = log_belief(k);
  return mu[1] - mu[0];
}

void dhs_step(FilterState& state, std::span<const double> loglik, const TransitionModel& transition,
              const CombinationMatrix& a, double gamma) {
  check_gamma(gamma);
  check_network(state, a);
  check_loglik(loglik, state.agents(), state.hypotheses());
  evolve_and_adapt(state, loglik, transition, gamma);
  geometric_combine(state, a);
  state.advance();
}

void diffusion_aa_step(FilterState& state, std::span<const double> loglik,
                       const TransitionModel& transition, const CombinationMatrix& a, double gamma) {
  check_gamma(gamma);
  check_network(state, a);
  check_loglik(loglik, state.agents(), state.hypotheses());
  evolve_and_adapt(state, loglik, transition, gamma);
  const std::size_t h = state.hypotheses();
  for (std::size_t k = 0; k < state.agents(); ++k) {
    auto mu = state.mutable_log_belief(k);
    std::fill(mu.begin(), mu.end(), kNegInf);
    for (std::size_t l = 0; l < state.agents(); ++l) {
      const double w = a(l, k);
      if (w == 0.0) continue;
      const double lw = std::log(w);
      const auto psi = state.log_intermediate(l);
      for (std::size_t t = 0; t < h; ++t) mu[t] = log_add_exp(mu[t], lw + psi[t]);
    }
    normalize_agent(mu, k);
  }
  state.advance();
}

void consensus_ga_step(FilterState& state, std::span<const double> loglik,
                       const TransitionModel& transition, const CombinationMatrix& a, double gamma) {
  check_gamma(gamma);
  check_network(state, a);
  check_loglik(loglik, state.agents(), state.hypotheses());
  evolve_and_adapt(state, loglik, transition, gamma);
  const std::size_t h = state.hypotheses();
  for (std::size_t k = 0; k < state.agents(); ++k) {
    auto mu = state.mutable_log_belief(k);
    std::fill(mu.begin(), mu.end(), 0.0);
    for (std::size_t l = 0; l < state.agents(); ++l) {
      const double w = a(l, k);
      if (w == 0.0) continue;
      const auto src = l == k ? state.log_intermediate(l) : state.log_prior(l);
      for (std::size_t t = 0; t < h; ++t) mu[t] += w * src[t];
    }
    normalize_agent(mu, k);
  }
  state.advance();
}

void asl_step(FilterState& state, std::span<const double> loglik, const CombinationMatrix& a,
              double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("asl: delta must be in (0,1)");
  check_network(state, a);
  check_loglik(loglik, state.agents(), state.hypotheses());
  const std::size_t h = state.hypotheses();
  for (std::size_t k = 0; k < state.agents(); ++k) {
    const auto mu = state.log_belief(k);
    auto eta = state.mutable_log_prior(k);
    std::copy(mu.begin(), mu.end(), eta.begin());
    auto psi = state.mutable_log_intermediate(k);
    for (std::size_t t = 0; t < h; ++t) psi[t] = loglik[k * h + t] + (1.0 - delta) * eta[t];
    normalize_agent(psi, k);
  }
  geometric_combine(state, a);
  state.advance();
}

#define DHMM_OBSERVATION_OVERLOAD(name, ...)                                              \
  std::vector<double> ll(models.agents() * models.hypotheses());                         \
  log_likelihood_matrix(models, observations, ll);                                       \
  name(state, ll, __VA_ARGS__)

void dhs_step(FilterState& state, std::span<const double> observations,
              const NetworkLikelihoods& models, const TransitionModel& transition,
              const CombinationMatrix& a, double gamma) {
  DHMM_OBSERVATION_OVERLOAD(dhs_step, transition, a, gamma);
}

void diffusion_aa_step(FilterState& state, std::span<const double> observations,
                       const NetworkLikelihoods& models, const TransitionModel& transition,
                       const CombinationMatrix& a, double gamma) {
  DHMM_OBSERVATION_OVERLOAD(diffusion_aa_step, transition, a, gamma);
}

void consensus_ga_step(FilterState& state, std::span<const double> observations,
                       const NetworkLikelihoods& models, const TransitionModel& transition,
                       const CombinationMatrix& a, double gamma) {
  DHMM_OBSERVATION_OVERLOAD(consensus_ga_step, transition, a, gamma);
}

void asl_step(FilterState& state, std::span<const double> observations,
              const NetworkLikelihoods& models, const CombinationMatrix& a, double delta) {
  DHMM_OBSERVATION_OVERLOAD(asl_step, a, delta);
}

#undef DHMM_OBSERVATION_OVERLOAD

void filter_step(const AlgorithmSpec& spec, FilterState& state, std::span<const double> loglik,
                 const TransitionModel& transition, const CombinationMatrix& a) {
  switch (spec.variant) {
    case Variant::Dhs:
      return dhs_step(state, loglik, transition, a, spec.gamma);
    case Variant::DiffusionAa:
      return diffusion_aa_step(state, loglik, transition, a, spec.gamma);
    case Variant::ConsensusGa:
      return consensus_ga_step(state, loglik, transition, a, spec.gamma);
    case Variant::Asl:
      return asl_step(state, loglik, a, spec.delta);
    case Variant::Centralized:
      break;
  }
  throw ValidationError("filter: the centralized variant runs on CentralizedState");
}

std::size_t map_estimate(const Belief& belief) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < belief.size(); ++t)
    if (belief[t] > belief[best]) best = t;
  return best;
}

std::size_t map_estimate(std::span<const double> log_belief) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < log_belief.size(); ++t)
    if (log_belief[t] > log_belief[best]) best = t;
  return best;
}

double predicted_log_ratio(double w_prev, const TransitionModel& transition) {
  if (transition.size() != 2) throw ValidationError("log-belief ratio: transition must be binary");
  const auto& lt = transition.log_kernel();
  return log_add_exp(lt(1, 0), lt(1, 1) + w_prev) - log_add_exp(lt(0, 0), lt(0, 1) + w_prev);
}

Eigen::VectorXd log_belief_ratio_step(const Eigen::VectorXd& w_prev,
                                      std::span<const double> observations,
                                      const NetworkLikelihoods& models,
                                      const TransitionModel& transition,
                                      const CombinationMatrix& a, double gamma,
                                      RatioVariant variant) {
  check_gamma(gamma);
  if (models.hypotheses() != 2) throw ValidationError("log-belief ratio: needs H = 2");
  const auto k = static_cast<Eigen::Index>(models.agents());
  if (w_prev.size() != k || static_cast<Eigen::Index>(observations.size()) != k ||
      static_cast<Eigen::Index>(a.agents()) != k) {
    throw DimensionError("log-belief ratio: agent count mismatch");
  }
  Eigen::VectorXd nu(k);
  Eigen::VectorXd chi(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    nu(i) = gamma * models[static_cast<std::size_t>(i)].log_likelihood_ratio(
                        observations[static_cast<std::size_t>(i)]);
    chi(i) = predicted_log_ratio(w_prev(i), transition);
  }
  const Eigen::MatrixXd at = a.matrix().transpose();
  if (variant == RatioVariant::Diffusion) return at * (nu + chi);
  return nu + at * chi;
}

std::vector<double> prediction_grid(const LikelihoodModel& model, std::size_t points) {
  if (model.family() == Family::Categorical) {
    std::vector<double> grid(model.symbols());
    for (std::size_t s = 0; s < grid.size(); ++s) grid[s] = static_cast<double>(s);
    return grid;
  }
  if (points < 2) throw ValidationError("prediction grid: need at least two points");
  double lo = 0.0;
  double hi = 0.0;
  if (auto support = model.support()) {
    std::tie(lo, hi) = *support;
  } else {
    lo = kInf;
    hi = -kInf;
    for (std::size_t t = 0; t < model.hypotheses(); ++t) {
      lo = std::min(lo, model.mean(t));
      hi = std::max(hi, model.mean(t));
    }
    lo -= 6.0 * model.sigma();
    hi += 6.0 * model.sigma();
  }
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

double predict_observation(const Belief& prior, const LikelihoodModel& model,
                           std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("predict observation: empty grid");
  if (prior.size() != model.hypotheses()) throw DimensionError("predict observation: size mismatch");
  double best_x = grid.front();
  double best_v = -1.0;
  for (double x : grid) {
    if (!model.in_support(x)) continue;
    double v = 0.0;
    for (std::size_t t = 0; t < prior.size(); ++t) {
      if (prior[t] > 0.0) v += prior[t] * std::exp(model.log_likelihood(x, t));
    }
    // Values equal up to rounding count as ties and keep the earlier point.
    if (v > best_v * (1.0 + kPredictTieTol)) {
      best_v = v;
      best_x = x;
    }
  }
  if (best_v < 0.0) throw ValidationError("predict observation: grid misses the support");
  return best_x;
}

double predict_observation(const Belief& prior, const LikelihoodModel& model) {
  const auto grid = prediction_grid(model);
  return predict_observation(prior, model, grid);
}

}  // namespace dhmm
