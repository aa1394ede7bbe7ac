#include "dhmm/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dhmm/errors.hpp"
#include "dhmm/numeric.hpp"

namespace dhmm {

namespace {

constexpr double kSimplexTol = 1e-12;

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionError(os.str());
  }
}

}  // namespace

Belief::Belief(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ValidationError("belief: empty probability vector");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || p > 1.0) throw ValidationError("belief: entry outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) {
    std::ostringstream os;
    os.precision(17);
    os << "belief: entries sum to " << sum << ", not 1";
    throw ValidationError(os.str());
  }
}

Belief Belief::uniform(std::size_t hypotheses) {
  if (hypotheses == 0) throw ValidationError("belief: zero hypotheses");
  return Belief(std::vector<double>(hypotheses, 1.0 / static_cast<double>(hypotheses)));
}

Belief Belief::point_mass(std::size_t hypotheses, std::size_t index) {
  if (index >= hypotheses) throw ValidationError("belief: point mass index out of range");
  std::vector<double> p(hypotheses, 0.0);
  p[index] = 1.0;
  return Belief(std::move(p));
}

Belief Belief::from_log(std::span<const double> log_probs) {
  std::vector<double> lp(log_probs.begin(), log_probs.end());
  normalize_log(lp);
  std::vector<double> p(lp.size());
  std::transform(lp.begin(), lp.end(), p.begin(), [](double v) { return std::exp(v); });
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= s;
  return Belief(std::move(p));
}

bool Belief::strictly_positive() const {
  return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; });
}

const Belief& Belief::require_positive() const {
  if (!strictly_positive()) {
    throw ValidationError("belief: initial beliefs must be strictly positive on every hypothesis");
  }
  return *this;
}

TransitionModel::TransitionModel(Eigen::MatrixXd kernel, Orientation orientation)
    : kernel_(orientation == Orientation::RowStochastic ? Eigen::MatrixXd(kernel.transpose())
                                                        : std::move(kernel)) {
  if (kernel_.rows() != kernel_.cols()) throw DimensionError("transition: kernel must be square");
  if (kernel_.rows() < 2) throw ValidationError("transition: need at least two hypotheses");
  for (Eigen::Index c = 0; c < kernel_.cols(); ++c) {
    double sum = 0.0;
    for (Eigen::Index r = 0; r < kernel_.rows(); ++r) {
      const double v = kernel_(r, c);
      if (!(v >= 0.0) || v > 1.0) throw ValidationError("transition: entry outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
      std::ostringstream os;
      os << "transition: column " << c << " sums to " << sum << ", not 1";
      throw ValidationError(os.str());
    }
  }
  log_kernel_ = kernel_.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : kNegInf; });
}

TransitionModel TransitionModel::binary_symmetric(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("transition: bsc alpha outside [0,1]");
  Eigen::MatrixXd k(2, 2);
  k << 1.0 - alpha, alpha, alpha, 1.0 - alpha;
  return TransitionModel(std::move(k));
}

TransitionModel TransitionModel::identity(std::size_t hypotheses) {
  const auto h = static_cast<Eigen::Index>(hypotheses);
  return TransitionModel(Eigen::MatrixXd::Identity(h, h));
}

TransitionModel TransitionModel::memoryless(const Belief& stationary) {
  const auto h = static_cast<Eigen::Index>(stationary.size());
  Eigen::MatrixXd k(h, h);
  for (Eigen::Index c = 0; c < h; ++c)
    for (Eigen::Index r = 0; r < h; ++r) k(r, c) = stationary[static_cast<std::size_t>(r)];
  return TransitionModel(std::move(k));
}

TransitionModel TransitionModel::after(const TransitionModel& inner) const {
  check_same_size(size(), inner.size(), "transition compose");
  Eigen::MatrixXd prod = kernel_ * inner.kernel_;
  // Renormalize columns so accumulated rounding does not trip validation.
  for (Eigen::Index c = 0; c < prod.cols(); ++c) prod.col(c) /= prod.col(c).sum();
  return TransitionModel(std::move(prod));
}

TransitionModel TransitionModel::power(std::size_t n) const {
  TransitionModel acc = identity(size());
  for (std::size_t i = 0; i < n; ++i) acc = after(acc);
  return acc;
}

bool TransitionModel::irreducible_aperiodic() const {
  const auto h = kernel_.rows();
  using Pattern = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
  const Pattern base = (kernel_.array() > 0.0).cast<int>().matrix();
  Pattern acc = base;
  const std::size_t cap = static_cast<std::size_t>(h * h);
  for (std::size_t n = 1; n <= cap; ++n) {
    if ((acc.array() > 0).all()) return true;
    acc = ((base * acc).array() > 0).cast<int>().matrix();
  }
  return false;
}

Belief evolve(const Belief& belief, const TransitionModel& model) {
  check_same_size(belief.size(), model.size(), "evolve");
  const Eigen::Map<const Eigen::VectorXd> mu(belief.probs().data(),
                                             static_cast<Eigen::Index>(belief.size()));
  Eigen::VectorXd eta = model.kernel() * mu;
  std::vector<double> out(eta.data(), eta.data() + eta.size());
  const double s = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= s;
  return Belief(std::move(out));
}

void evolve_log(std::span<const double> log_belief, const TransitionModel& model,
                std::span<double> out) {
  const std::size_t h = model.size();
  check_same_size(log_belief.size(), h, "evolve");
  check_same_size(out.size(), h, "evolve output");
  const Eigen::MatrixXd& lk = model.log_kernel();
  for (std::size_t next = 0; next < h; ++next) {
    double mx = kNegInf;
    for (std::size_t prev = 0; prev < h; ++prev) {
      mx = std::max(mx, lk(static_cast<Eigen::Index>(next), static_cast<Eigen::Index>(prev)) +
                            log_belief[prev]);
    }
    if (mx == kNegInf) {
      out[next] = kNegInf;
      continue;
    }
    double acc = 0.0;
    for (std::size_t prev = 0; prev < h; ++prev) {
      const double t = lk(static_cast<Eigen::Index>(next), static_cast<Eigen::Index>(prev)) +
                       log_belief[prev];
      if (t != kNegInf) acc += std::exp(t - mx);
    }
    out[next] = mx + std::log(acc);
  }
}

double dobrushin_coefficient(const TransitionModel& model) {
  const auto& k = model.kernel();
  double best = 0.0;
  for (Eigen::Index a = 0; a < k.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < k.cols(); ++b) {
      best = std::max(best, 0.5 * (k.col(a) - k.col(b)).cwiseAbs().sum());
    }
  }
  return std::min(best, 1.0);
}

Belief perron_vector(const TransitionModel& model, std::size_t max_iterations, double tolerance) {
  if (!model.irreducible_aperiodic()) {
    throw NonErgodicError("perron_vector: transition model is not irreducible and aperiodic");
  }
  const auto& k = model.kernel();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(k.rows(), 1.0 / static_cast<double>(k.rows()));
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next = k * pi;
    next /= next.sum();
    const double residual = (k * next - next).cwiseAbs().maxCoeff();
    pi = std::move(next);
    if (residual < tolerance) {
      return Belief(std::vector<double>(pi.data(), pi.data() + pi.size()));
    }
  }
  throw NonErgodicError("perron_vector: power iteration did not converge within the iteration cap");
}

std::vector<std::size_t> sample_trajectory(const TransitionModel& model, const Belief& initial,
                                           std::size_t horizon, Rng& rng) {
  check_same_size(initial.size(), model.size(), "sample_trajectory");
  if (horizon == 0) throw ValidationError("sample_trajectory: horizon must be >= 1");
  const std::size_t h = model.size();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](auto prob_of) {
    const double u = unif(rng);
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < h; ++i) {
      const double p = prob_of(i);
      if (p > 0.0) last_positive = i;
      cum += p;
      if (u < cum) return i;
    }
    return last_positive;
  };
  std::vector<std::size_t> states(horizon);
  states[0] = draw([&](std::size_t i) { return initial[i]; });
  for (std::size_t t = 1; t < horizon; ++t) {
    const auto prev = static_cast<Eigen::Index>(states[t - 1]);
    states[t] = draw([&](std::size_t i) { return model.kernel()(static_cast<Eigen::Index>(i), prev); });
  }
  return states;
}

double kl_divergence(const Belief& p, const Belief& q) {
  check_same_size(p.size(), q.size(), "kl_divergence");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInf;
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(acc, 0.0);
}

double kl_divergence_log(std::span<const double> log_p, std::span<const double> log_q) {
  check_same_size(log_p.size(), log_q.size(), "kl_divergence");
  double acc = 0.0;
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    if (log_p[i] == kNegInf) continue;
    if (log_q[i] == kNegInf) return kInf;
    acc += std::exp(log_p[i]) * (log_p[i] - log_q[i]);
  }
  return std::max(acc, 0.0);
}

double total_variation(const Belief& p, const Belief& q) {
  check_same_size(p.size(), q.size(), "total_variation");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

}  // namespace dhmm
