#include "dhmm/analysis/density.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "dhmm/errors.hpp"
#include "dhmm/filters.hpp"
#include "dhmm/numeric.hpp"
#include "dhmm/rng.hpp"

namespace dhmm::analysis {

namespace {

constexpr double kPilotSpread = 6.0;
constexpr double kNegligibleMass = 1e-18;

std::size_t default_points(std::size_t dim) {
  switch (dim) {
    case 1:
      return 201;
    case 2:
      return 101;
    default:
      return 31;
  }
}

// nu_k = gamma (slope_k xi + offset_k) with xi ~ N(mean_theta, sigma^2).
struct GaussianLlr {
  Eigen::VectorXd beta0;
  Eigen::VectorXd beta1;
  Eigen::VectorXd variance;

  const Eigen::VectorXd& beta(std::size_t theta) const { return theta == 0 ? beta0 : beta1; }
};

GaussianLlr gaussian_llr(const NetworkLikelihoods& models, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("density evolution: gamma must be > 0");
  if (models.hypotheses() != 2) throw ValidationError("density evolution: needs H = 2");
  const auto k = static_cast<Eigen::Index>(models.agents());
  GaussianLlr out{Eigen::VectorXd(k), Eigen::VectorXd(k), Eigen::VectorXd(k)};
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& m = models[static_cast<std::size_t>(i)];
    if (m.family() != Family::Gaussian) {
      throw ValidationError("density evolution: needs untruncated Gaussian likelihoods");
    }
    const double m0 = m.mean(0);
    const double m1 = m.mean(1);
    const double s2 = m.sigma() * m.sigma();
    if (m0 == m1) throw ValidationError("density evolution: hypotheses must have distinct means");
    const double slope = (m1 - m0) / s2;
    const double offset = (m0 * m0 - m1 * m1) / (2.0 * s2);
    out.beta0(i) = gamma * (slope * m0 + offset);
    out.beta1(i) = gamma * (slope * m1 + offset);
    out.variance(i) = gamma * gamma * slope * slope * s2;
  }
  return out;
}

Eigen::VectorXd chi(const Eigen::VectorXd& w, const TransitionModel& transition) {
  Eigen::VectorXd out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) out(i) = predicted_log_ratio(w(i), transition);
  return out;
}

// Linear-Gaussian transition of the grid coordinate:
//   g_i | (theta_i, w_{i-1}) ~ N(mean(theta_i, w_{i-1}), diag(sd^2)),
// with agent ratios w = agent_map * g.
struct Kernel {
  std::size_t dim = 0;
  Eigen::MatrixXd agent_map;
  Eigen::MatrixXd grid_from_agents;
  Eigen::VectorXd sd;
  std::function<Eigen::VectorXd(std::size_t, const Eigen::VectorXd&)> mean;
  // Coordinate sampler used by the pilot run: next g from (theta, w_prev, nu).
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> advance;
};

GridSpec pilot_grid(const Kernel& kernel, const TransitionModel& transition,
                    const NetworkLikelihoods& models, double gamma, const Belief& state_prior,
                    const Eigen::VectorXd& w0, const DensityOptions& options) {
  const std::size_t k = models.agents();
  const std::size_t dim = kernel.dim;
  std::vector<double> sum(dim, 0.0);
  std::vector<double> sum_sq(dim, 0.0);
  std::vector<double> lo(dim, kInf);
  std::vector<double> hi(dim, -kInf);
  std::size_t n = 0;
  for (std::size_t run = 0; run < options.pilot_runs; ++run) {
    Rng rng = make_rng(derive_seed(options.seed, {run, 0}));
    std::vector<Rng> agent_rng;
    for (std::size_t a = 0; a < k; ++a) agent_rng.push_back(make_rng(derive_seed(options.seed, {run, 1, a})));
    const auto theta = sample_trajectory(transition, state_prior, options.steps + 1, rng);
    Eigen::VectorXd w = w0;
    Eigen::VectorXd nu(static_cast<Eigen::Index>(k));
    for (std::size_t i = 1; i <= options.steps; ++i) {
      for (std::size_t a = 0; a < k; ++a) {
        const double xi = models[a].sample(theta[i], agent_rng[a]);
        nu(static_cast<Eigen::Index>(a)) = gamma * models[a].log_likelihood_ratio(xi);
      }
      const Eigen::VectorXd g = kernel.advance(w, nu);
      for (std::size_t d = 0; d < dim; ++d) {
        const double x = g(static_cast<Eigen::Index>(d));
        sum[d] += x;
        sum_sq[d] += x * x;
        lo[d] = std::min(lo[d], x);
        hi[d] = std::max(hi[d], x);
      }
      ++n;
      w = kernel.agent_map * g;
    }
  }
  GridSpec spec;
  spec.points = options.points ? options.points : default_points(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double mean = sum[d] / static_cast<double>(n);
    const double sd = std::sqrt(std::max(0.0, sum_sq[d] / static_cast<double>(n) - mean * mean));
    const double pad = kernel.sd(static_cast<Eigen::Index>(d));
    spec.lower.push_back(std::min(mean - kPilotSpread * sd, lo[d] - pad));
    spec.upper.push_back(std::max(mean + kPilotSpread * sd, hi[d] + pad));
  }
  return spec;
}

class Propagator {
 public:
  Propagator(const Kernel& kernel, const GridSpec& grid) : kernel_(kernel), grid_(grid) {
    const std::size_t dim = kernel.dim;
    edges_.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      for (std::size_t j = 0; j <= grid.points; ++j) {
        edges_[d].push_back(grid.lower[d] + grid.width(d) * static_cast<double>(j));
      }
    }
    axis_prob_.assign(dim, std::vector<double>(grid.points, 0.0));
    const auto k = kernel.agent_map.rows();
    agent_sd_.resize(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      double v = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double c = kernel.agent_map(a, static_cast<Eigen::Index>(d));
        const double s = kernel.sd(static_cast<Eigen::Index>(d));
        v += c * c * s * s;
      }
      agent_sd_(a) = std::sqrt(v);
    }
    lo_seen_.assign(dim, kInf);
    hi_seen_.assign(dim, -kInf);
  }

  // Spreads `weight` of mass from a source whose kernel mean is `rho` into
  // `target`; returns the mass that falls outside the grid. Adds the
  // class-conditional error mass per agent into err.
  double spread(double weight, std::size_t theta, const Eigen::VectorXd& rho,
                std::vector<double>& target, Eigen::Ref<Eigen::VectorXd> err) {
    const std::size_t dim = kernel_.dim;
    const Eigen::VectorXd wk = kernel_.agent_map * rho;
    for (Eigen::Index a = 0; a < wk.size(); ++a) {
      const double z = wk(a) / agent_sd_(a);
      // P(w_k > 0) = Phi(z); P(w_k <= 0) = Phi(-z).
      err(a) += weight * (theta == 0 ? normal_cdf(z) : normal_cdf(-z));
    }
    double inside = 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double s = kernel_.sd(static_cast<Eigen::Index>(d));
      const double m = rho(static_cast<Eigen::Index>(d));
      lo_seen_[d] = std::min(lo_seen_[d], m - kPilotSpread * s);
      hi_seen_[d] = std::max(hi_seen_[d], m + kPilotSpread * s);
      auto& p = axis_prob_[d];
      double prev = normal_cdf((edges_[d][0] - m) / s);
      const double first = prev;
      for (std::size_t j = 0; j < grid_.points; ++j) {
        const double cur = normal_cdf((edges_[d][j + 1] - m) / s);
        p[j] = cur - prev;
        prev = cur;
      }
      inside *= prev - first;
    }
    accumulate(0, 0, weight, target);
    return weight * (1.0 - inside);
  }

  std::string leak_hint() const {
    std::ostringstream os;
    for (std::size_t d = 0; d < kernel_.dim; ++d) {
      os << (d ? ", " : "") << "axis " << d << " needs [" << lo_seen_[d] << ", " << hi_seen_[d]
         << "] (grid [" << grid_.lower[d] << ", " << grid_.upper[d] << "])";
    }
    return os.str();
  }

 private:
  void accumulate(std::size_t axis, std::size_t offset, double w, std::vector<double>& target) {
    const std::size_t dim = kernel_.dim;
    const std::size_t stride = stride_of(axis);
    const auto& p = axis_prob_[axis];
    for (std::size_t j = 0; j < grid_.points; ++j) {
      const double v = w * p[j];
      if (v == 0.0) continue;
      if (axis + 1 == dim) {
        target[offset + j * stride] += v;
      } else {
        accumulate(axis + 1, offset + j * stride, v, target);
      }
    }
  }

  std::size_t stride_of(std::size_t axis) const {
    std::size_t s = 1;
    for (std::size_t d = 0; d < axis; ++d) s *= grid_.points;
    return s;
  }

  const Kernel& kernel_;
  const GridSpec& grid_;
  std::vector<std::vector<double>> edges_;
  std::vector<std::vector<double>> axis_prob_;
  Eigen::VectorXd agent_sd_;
  std::vector<double> lo_seen_;
  std::vector<double> hi_seen_;
};

Eigen::VectorXd cell_centre(const GridSpec& grid, std::size_t cell) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(grid.dimension()));
  for (std::size_t d = 0; d < grid.dimension(); ++d) {
    c(static_cast<Eigen::Index>(d)) = grid.centre(d, cell % grid.points);
    cell /= grid.points;
  }
  return c;
}

GridDensity evolve_density(const Kernel& kernel, const TransitionModel& transition,
                           const NetworkLikelihoods& models, double gamma,
                           const DensityOptions& options) {
  if (options.steps == 0) throw ValidationError("density evolution: steps must be >= 1");
  if (transition.size() != 2) throw ValidationError("density evolution: transition must be binary");
  const std::size_t k = models.agents();
  const Belief state_prior = options.state_prior.value_or(Belief::uniform(2));
  const Belief initial = options.initial_belief.value_or(Belief::uniform(2));
  initial.require_positive();
  const Eigen::VectorXd w0 =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), std::log(initial[1] / initial[0]));

  GridDensity out;
  out.dimension = kernel.dim;
  out.agents = k;
  out.steps = options.steps;
  out.agent_map = kernel.agent_map;
  out.grid_from_agents = kernel.grid_from_agents;
  out.grid = options.grid ? *options.grid
                          : pilot_grid(kernel, transition, models, gamma, state_prior, w0, options);
  if (out.grid.dimension() != kernel.dim || out.grid.upper.size() != kernel.dim ||
      out.grid.points < 2) {
    throw ValidationError("density evolution: grid does not match the recursion dimension");
  }
  for (std::size_t d = 0; d < kernel.dim; ++d) {
    if (!(out.grid.lower[d] < out.grid.upper[d])) throw ValidationError("density evolution: empty grid axis");
  }

  const std::size_t cells = out.grid.cells();
  const auto kk = static_cast<Eigen::Index>(k);
  const auto steps = static_cast<Eigen::Index>(options.steps);
  out.error_given0 = Eigen::MatrixXd::Zero(kk, steps);
  out.error_given1 = Eigen::MatrixXd::Zero(kk, steps);
  Propagator prop(kernel, out.grid);

  std::array<std::vector<double>, 2> current{std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0)};
  std::array<std::vector<double>, 2> next = current;
  std::vector<Eigen::VectorXd> centres;
  std::vector<Eigen::VectorXd> centre_agents;
  centres.reserve(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    centres.push_back(cell_centre(out.grid, c));
    centre_agents.push_back(kernel.agent_map * centres.back());
  }

  for (std::size_t i = 1; i <= options.steps; ++i) {
    for (auto& v : next) std::fill(v.begin(), v.end(), 0.0);
    double leaked = 0.0;
    const auto col = static_cast<Eigen::Index>(i - 1);
    for (std::size_t theta = 0; theta < 2; ++theta) {
      Eigen::VectorXd err = Eigen::VectorXd::Zero(kk);
      if (i == 1) {
        const double weight = transition(theta, 0) * state_prior[0] + transition(theta, 1) * state_prior[1];
        if (weight > 0.0) leaked += prop.spread(weight, theta, kernel.mean(theta, w0), next[theta], err);
      } else {
        for (std::size_t c = 0; c < cells; ++c) {
          const double weight = transition(theta, 0) * current[0][c] + transition(theta, 1) * current[1][c];
          if (weight == 0.0) continue;
          if (weight < kNegligibleMass) {
            leaked += weight;
            continue;
          }
          leaked += prop.spread(weight, theta, kernel.mean(theta, centre_agents[c]), next[theta], err);
        }
      }
      (theta == 0 ? out.error_given0 : out.error_given1).col(col) = err;
    }
    out.leakage += leaked;
    if (out.leakage > options.leakage_limit) {
      std::ostringstream os;
      os << "density evolution: " << out.leakage << " of the probability mass left the grid by step "
         << i << " (limit " << options.leakage_limit << "); " << prop.leak_hint();
      throw GridLeakageError(os.str());
    }
    std::swap(current, next);
    double total = 0.0;
    for (const auto& v : current)
      for (double m : v) total += m;
    out.total_mass.push_back(total);
    if (options.keep_history) out.history.push_back(current);
  }
  out.error = out.error_given0 + out.error_given1;
  out.mass = std::move(current);
  return out;
}

}  // namespace

double GridSpec::width(std::size_t axis) const {
  return (upper[axis] - lower[axis]) / static_cast<double>(points);
}

double GridSpec::centre(std::size_t axis, std::size_t j) const {
  return lower[axis] + (static_cast<double>(j) + 0.5) * width(axis);
}

std::size_t GridSpec::cells() const {
  std::size_t n = 1;
  for (std::size_t d = 0; d < dimension(); ++d) n *= points;
  return n;
}

double GridDensity::cell_volume() const {
  double v = 1.0;
  for (std::size_t d = 0; d < dimension; ++d) v *= grid.width(d);
  return v;
}

double GridDensity::density(std::size_t theta, std::size_t cell) const {
  return mass.at(theta).at(cell) / cell_volume();
}

GridDensity density_evolution_consensus(const TransitionModel& transition,
                                        const NetworkLikelihoods& models,
                                        const CombinationMatrix& a, double gamma,
                                        const DensityOptions& options) {
  const std::size_t k = models.agents();
  if (a.agents() != k) throw DimensionError("density evolution: combination matrix size mismatch");
  if (k > 3) {
    throw TractabilityError("density evolution: the consensus grid supports K <= 3 (got K = " +
                            std::to_string(k) + "); use the Monte Carlo error estimator instead");
  }
  const GaussianLlr llr = gaussian_llr(models, gamma);
  const Eigen::MatrixXd at = a.matrix().transpose();
  Kernel kernel;
  kernel.dim = k;
  kernel.agent_map = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  kernel.grid_from_agents = kernel.agent_map;
  kernel.sd = llr.variance.cwiseSqrt();
  kernel.mean = [&transition, &llr, at](std::size_t theta, const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return llr.beta(theta) + at * chi(w, transition);
  };
  kernel.advance = [&transition, at](const Eigen::VectorXd& w, const Eigen::VectorXd& nu) -> Eigen::VectorXd {
    return nu + at * chi(w, transition);
  };
  return evolve_density(kernel, transition, models, gamma, options);
}

GridDensity density_evolution_diffusion(const TransitionModel& transition,
                                        const NetworkLikelihoods& models,
                                        const CombinationMatrix& a, double gamma,
                                        const DensityOptions& options) {
  const std::size_t k = models.agents();
  if (a.agents() != k) throw DimensionError("density evolution: combination matrix size mismatch");
  const GaussianLlr llr = gaussian_llr(models, gamma);
  const LowRankFactor factor = lowrank_factor(a, llr.variance);
  if (factor.rank() > 2) {
    throw TractabilityError("density evolution: the diffusion grid supports rank(A) <= 2 (got r = " +
                            std::to_string(factor.rank()) +
                            "); use the Monte Carlo error estimator instead");
  }
  const Eigen::MatrixXd reduce = factor.q_transpose_pinv() * a.matrix().transpose();
  Kernel kernel;
  kernel.dim = factor.rank();
  kernel.agent_map = factor.q().transpose();
  kernel.grid_from_agents = factor.q_transpose_pinv();
  kernel.sd = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(factor.rank()));
  kernel.mean = [&transition, &llr, reduce](std::size_t theta, const Eigen::VectorXd& w) -> Eigen::VectorXd {
    return reduce * (llr.beta(theta) + chi(w, transition));
  };
  kernel.advance = [&transition, reduce](const Eigen::VectorXd& w, const Eigen::VectorXd& nu) -> Eigen::VectorXd {
    return reduce * (nu + chi(w, transition));
  };
  return evolve_density(kernel, transition, models, gamma, options);
}

double grid_vs_samples_tv(const GridDensity& density, const RatioSamples& samples, std::size_t merge) {
  if (merge == 0) throw ValidationError("grid tv: merge factor must be >= 1");
  if (samples.w.size() != density.agents) throw DimensionError("grid tv: agent count mismatch");
  const std::size_t n = samples.theta.size();
  if (n == 0) throw ValidationError("grid tv: no samples");
  const GridSpec& g = density.grid;
  const std::size_t dim = density.dimension;
  const std::size_t coarse = (g.points + merge - 1) / merge;
  std::size_t bins = 1;
  for (std::size_t d = 0; d < dim; ++d) bins *= coarse;

  auto coarse_index = [&](std::size_t cell) {
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < dim; ++d) {
      idx += ((cell % g.points) / merge) * stride;
      cell /= g.points;
      stride *= coarse;
    }
    return idx;
  };

  std::array<std::vector<double>, 2> grid_p{std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};
  std::array<std::vector<double>, 2> mc_p = grid_p;
  double grid_out = 1.0;
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t c = 0; c < g.cells(); ++c) {
      grid_p[t][coarse_index(c)] += density.mass[t][c];
      grid_out -= density.mass[t][c];
    }
  }
  double mc_out = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd w(static_cast<Eigen::Index>(density.agents));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t a = 0; a < density.agents; ++a) w(static_cast<Eigen::Index>(a)) = samples.w[a][r];
    const Eigen::VectorXd x = density.grid_from_agents * w;
    std::size_t idx = 0;
    std::size_t stride = 1;
    bool inside = true;
    for (std::size_t d = 0; d < dim && inside; ++d) {
      const double u = (x(static_cast<Eigen::Index>(d)) - g.lower[d]) / g.width(d);
      if (!(u >= 0.0 && u < static_cast<double>(g.points))) {
        inside = false;
        break;
      }
      idx += (static_cast<std::size_t>(u) / merge) * stride;
      stride *= coarse;
    }
    if (!inside) {
      mc_out += inv_n;
      continue;
    }
    mc_p[std::min<std::size_t>(samples.theta[r], 1)][idx] += inv_n;
  }
  double tv = std::abs(std::max(0.0, grid_out) - mc_out);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t b = 0; b < bins; ++b) tv += std::abs(grid_p[t][b] - mc_p[t][b]);
  return 0.5 * tv;
}

}  // namespace dhmm::analysis
