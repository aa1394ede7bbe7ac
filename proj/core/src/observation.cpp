#include "dhmm/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dhmm/errors.hpp"
#include "dhmm/numeric.hpp"

namespace dhmm {

namespace {

constexpr double kPmfTol = 1e-9;
constexpr double kQuadratureTol = 1e-12;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double gaussian_log_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_hypothesis(std::size_t hypothesis, std::size_t count) {
  if (hypothesis >= count) {
    std::ostringstream os;
    os << "likelihood: hypothesis " << hypothesis << " out of range (H=" << count << ")";
    throw ValidationError(os.str());
  }
}

void check_means(const std::vector<double>& means, double sigma) {
  if (means.size() < 2) throw ValidationError("likelihood: need at least two hypotheses");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("likelihood: sigma must be > 0");
  for (double m : means)
    if (!std::isfinite(m)) throw ValidationError("likelihood: non-finite mean");
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::Gaussian:
      return "gaussian";
    case Family::TruncatedGaussian:
      return "truncated-gaussian";
    case Family::Categorical:
      return "categorical";
  }
  return "unknown";
}

LikelihoodModel::LikelihoodModel(
    std::variant<GaussianParams, TruncatedParams, CategoricalParams> params)
    : params_(std::move(params)) {}

LikelihoodModel LikelihoodModel::gaussian(std::vector<double> means, double sigma) {
  check_means(means, sigma);
  return LikelihoodModel(GaussianParams{std::move(means), sigma});
}

LikelihoodModel LikelihoodModel::truncated_gaussian(std::vector<double> means, double sigma,
                                                    double lower, double upper) {
  check_means(means, sigma);
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw ValidationError("likelihood: truncation interval must satisfy lower < upper");
  }
  TruncatedParams p{std::move(means), sigma, lower, upper, {}};
  for (double m : p.means) {
    // Tolerance relative to the size of Z; the CDF difference only sets the scale.
    const double scale = normal_cdf((upper - m) / sigma) - normal_cdf((lower - m) / sigma);
    const double tol = kQuadratureTol * std::min(1.0, std::max(scale, 1e-300));
    const double z = adaptive_simpson([&](double x) { return normal_pdf(x, m, sigma); }, lower, upper, tol);
    if (!(z > 0.0)) throw ValidationError("likelihood: truncation interval carries no mass");
    p.log_z.push_back(std::log(z));
  }
  return LikelihoodModel(std::move(p));
}

LikelihoodModel LikelihoodModel::categorical(std::vector<std::vector<double>> pmf_rows) {
  if (pmf_rows.empty()) throw ValidationError("likelihood: categorical model needs pmf rows");
  const std::size_t m = pmf_rows.front().size();
  if (m == 0) throw ValidationError("likelihood: empty categorical alphabet");
  for (const auto& row : pmf_rows) {
    if (row.size() != m) throw DimensionError("likelihood: pmf rows differ in alphabet size");
    double s = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || v > 1.0) throw ValidationError("likelihood: pmf entry outside [0,1]");
      s += v;
    }
    if (std::abs(s - 1.0) > kPmfTol) throw ValidationError("likelihood: pmf row does not sum to 1");
  }
  return LikelihoodModel(CategoricalParams{std::move(pmf_rows)});
}

Family LikelihoodModel::family() const {
  return std::visit(Overloaded{[](const GaussianParams&) { return Family::Gaussian; },
                               [](const TruncatedParams&) { return Family::TruncatedGaussian; },
                               [](const CategoricalParams&) { return Family::Categorical; }},
                    params_);
}

std::size_t LikelihoodModel::hypotheses() const {
  return std::visit(Overloaded{[](const GaussianParams& p) { return p.means.size(); },
                               [](const TruncatedParams& p) { return p.means.size(); },
                               [](const CategoricalParams& p) { return p.rows.size(); }},
                    params_);
}

double LikelihoodModel::sample(std::size_t hypothesis, Rng& rng) const {
  check_hypothesis(hypothesis, hypotheses());
  return std::visit(
      Overloaded{
          [&](const GaussianParams& p) {
            std::normal_distribution<double> d(p.means[hypothesis], p.sigma);
            return d(rng);
          },
          [&](const TruncatedParams& p) {
            std::normal_distribution<double> d(p.means[hypothesis], p.sigma);
            for (;;) {
              const double x = d(rng);
              if (x >= p.lower && x <= p.upper) return x;
            }
          },
          [&](const CategoricalParams& p) {
            const auto& row = p.rows[hypothesis];
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const double r = u(rng);
            double cum = 0.0;
            std::size_t last_positive = 0;
            for (std::size_t s = 0; s < row.size(); ++s) {
              if (row[s] > 0.0) last_positive = s;
              cum += row[s];
              if (r < cum) return static_cast<double>(s);
            }
            return static_cast<double>(last_positive);
          }},
      params_);
}

bool LikelihoodModel::in_support(double observation) const {
  return std::visit(
      Overloaded{[&](const GaussianParams&) { return std::isfinite(observation); },
                 [&](const TruncatedParams& p) {
                   return observation >= p.lower && observation <= p.upper;
                 },
                 [&](const CategoricalParams& p) {
                   if (!(observation >= 0.0) || observation != std::floor(observation)) return false;
                   const auto s = static_cast<std::size_t>(observation);
                   if (s >= p.rows.front().size()) return false;
                   return std::any_of(p.rows.begin(), p.rows.end(),
                                      [&](const auto& row) { return row[s] > 0.0; });
                 }},
      params_);
}

double LikelihoodModel::log_likelihood(double observation, std::size_t hypothesis) const {
  check_hypothesis(hypothesis, hypotheses());
  if (!in_support(observation)) {
    std::ostringstream os;
    os << "likelihood: observation " << observation << " outside the " << to_string(family())
       << " support";
    throw OutOfSupportError(os.str());
  }
  const double base = std::visit(
      Overloaded{[&](const GaussianParams& p) {
                   return gaussian_log_pdf(observation, p.means[hypothesis], p.sigma);
                 },
                 [&](const TruncatedParams& p) {
                   return gaussian_log_pdf(observation, p.means[hypothesis], p.sigma) -
                          p.log_z[hypothesis];
                 },
                 [&](const CategoricalParams& p) {
                   const double v = p.rows[hypothesis][static_cast<std::size_t>(observation)];
                   return v > 0.0 ? std::log(v) : kNegInf;
                 }},
      params_);
  return base + log_scale_;
}

double LikelihoodModel::log_likelihood_ratio(double observation) const {
  if (hypotheses() != 2) throw ValidationError("likelihood: log-likelihood ratio needs H = 2");
  return log_likelihood(observation, 1) - log_likelihood(observation, 0);
}

std::optional<std::pair<double, double>> LikelihoodModel::support() const {
  return std::visit(
      Overloaded{[](const GaussianParams&) -> std::optional<std::pair<double, double>> {
                   return std::nullopt;
                 },
                 [](const TruncatedParams& p) -> std::optional<std::pair<double, double>> {
                   return std::make_pair(p.lower, p.upper);
                 },
                 [](const CategoricalParams& p) -> std::optional<std::pair<double, double>> {
                   return std::make_pair(0.0, static_cast<double>(p.rows.front().size() - 1));
                 }},
      params_);
}

double LikelihoodModel::mean(std::size_t hypothesis) const {
  check_hypothesis(hypothesis, hypotheses());
  if (const auto* g = std::get_if<GaussianParams>(&params_)) return g->means[hypothesis];
  if (const auto* t = std::get_if<TruncatedParams>(&params_)) return t->means[hypothesis];
  throw ValidationError("likelihood: categorical model has no means");
}

double LikelihoodModel::sigma() const {
  if (const auto* g = std::get_if<GaussianParams>(&params_)) return g->sigma;
  if (const auto* t = std::get_if<TruncatedParams>(&params_)) return t->sigma;
  throw ValidationError("likelihood: categorical model has no sigma");
}

double LikelihoodModel::log_normalizer(std::size_t hypothesis) const {
  check_hypothesis(hypothesis, hypotheses());
  if (const auto* t = std::get_if<TruncatedParams>(&params_)) return t->log_z[hypothesis];
  return 0.0;
}

std::span<const double> LikelihoodModel::pmf(std::size_t hypothesis) const {
  check_hypothesis(hypothesis, hypotheses());
  if (const auto* c = std::get_if<CategoricalParams>(&params_)) return c->rows[hypothesis];
  throw ValidationError("likelihood: only categorical models have a pmf");
}

std::size_t LikelihoodModel::symbols() const {
  if (const auto* c = std::get_if<CategoricalParams>(&params_)) return c->rows.front().size();
  throw ValidationError("likelihood: only categorical models have symbols");
}

double LikelihoodModel::abs_log_bound() const {
  return std::visit(
      Overloaded{
          [](const GaussianParams&) -> double {
            throw BoundednessError(
                "likelihood: untruncated Gaussian log-likelihood is unbounded on its support");
          },
          [&](const TruncatedParams& p) {
            // log L is a concave quadratic in xi: its minimum over [lower, upper]
            // sits at an endpoint and its maximum at the clamped mean.
            double bound = 0.0;
            for (std::size_t h = 0; h < p.means.size(); ++h) {
              const double mode = std::clamp(p.means[h], p.lower, p.upper);
              for (double x : {p.lower, p.upper, mode}) {
                bound = std::max(bound, std::abs(log_likelihood(x, h)));
              }
            }
            return bound;
          },
          [&](const CategoricalParams& p) {
            double bound = 0.0;
            const std::size_t m = p.rows.front().size();
            for (std::size_t s = 0; s < m; ++s) {
              const bool reachable =
                  std::any_of(p.rows.begin(), p.rows.end(), [&](const auto& r) { return r[s] > 0.0; });
              if (!reachable) continue;
              for (const auto& row : p.rows) {
                if (row[s] == 0.0) {
                  throw BoundednessError(
                      "likelihood: categorical symbol has zero mass under some hypothesis");
                }
                bound = std::max(bound, std::abs(std::log(row[s]) + log_scale_));
              }
            }
            return bound;
          }},
      params_);
}

bool LikelihoodModel::shared_support() const {
  if (const auto* c = std::get_if<CategoricalParams>(&params_)) {
    const std::size_t m = c->rows.front().size();
    for (std::size_t s = 0; s < m; ++s) {
      const bool any = std::any_of(c->rows.begin(), c->rows.end(), [&](const auto& r) { return r[s] > 0.0; });
      const bool all = std::all_of(c->rows.begin(), c->rows.end(), [&](const auto& r) { return r[s] > 0.0; });
      if (any && !all) return false;
    }
  }
  return true;
}

LikelihoodModel LikelihoodModel::scaled(double log_scale) const {
  LikelihoodModel copy = *this;
  copy.log_scale_ += log_scale;
  return copy;
}

NetworkLikelihoods::NetworkLikelihoods(std::vector<LikelihoodModel> models)
    : models_(std::move(models)) {
  if (models_.empty()) throw ValidationError("likelihoods: network needs at least one agent");
  const std::size_t h = models_.front().hypotheses();
  for (const auto& m : models_) {
    if (m.hypotheses() != h) {
      throw DimensionError("likelihoods: agents disagree on the number of hypotheses");
    }
  }
}

NetworkLikelihoods NetworkLikelihoods::replicate(const LikelihoodModel& model, std::size_t agents) {
  return NetworkLikelihoods(std::vector<LikelihoodModel>(agents, model));
}

double log_likelihood_bound(const NetworkLikelihoods& models) {
  double bound = 0.0;
  for (const auto& m : models.models()) bound = std::max(bound, m.abs_log_bound());
  return bound;
}

}  // namespace dhmm
