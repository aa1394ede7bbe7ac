#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dhmm/rng.hpp"

namespace dhmm {

enum class Family { Gaussian, TruncatedGaussian, Categorical };

std::string to_string(Family family);

/// Scalar observation model L(xi | theta) for one agent.
///
/// Gaussian families share a standard deviation across hypotheses and
/// differ in their means. The truncated family restricts the Gaussian to
/// [lower, upper] and renormalizes by Z_theta, computed once at
/// construction by adaptive Simpson quadrature. Categorical observations
/// are symbol indices carried in a double.
class LikelihoodModel {
 public:
  static LikelihoodModel gaussian(std::vector<double> means, double sigma);
  static LikelihoodModel truncated_gaussian(std::vector<double> means, double sigma, double lower,
                                            double upper);
  /// One pmf row per hypothesis, all rows over the same symbol alphabet.
  static LikelihoodModel categorical(std::vector<std::vector<double>> pmf_rows);

  Family family() const;
  std::size_t hypotheses() const;

  double sample(std::size_t hypothesis, Rng& rng) const;
  /// Natural-log density or pmf. Throws OutOfSupportError outside the support.
  double log_likelihood(double observation, std::size_t hypothesis) const;
  /// log L(xi|1) - log L(xi|0); binary models only.
  double log_likelihood_ratio(double observation) const;

  bool in_support(double observation) const;
  /// Closed support interval, or nullopt for the untruncated Gaussian.
  std::optional<std::pair<double, double>> support() const;

  /// Gaussian-family accessors; throw ValidationError for categorical.
  double mean(std::size_t hypothesis) const;
  double sigma() const;
  /// log Z_theta for the truncated family (0 for the plain Gaussian).
  double log_normalizer(std::size_t hypothesis) const;
  std::span<const double> pmf(std::size_t hypothesis) const;
  std::size_t symbols() const;

  /// max over hypotheses and support of |log L|. Throws BoundednessError
  /// for families whose log-likelihood is unbounded on the support.
  double abs_log_bound() const;

  /// True when every pair of hypotheses has finite KL divergence.
  bool shared_support() const;

  /// Returns a copy whose likelihoods are all multiplied by exp(log_scale).
  /// Only meaningful for comparisons of normalized posteriors.
  LikelihoodModel scaled(double log_scale) const;

 private:
  struct GaussianParams {
    std::vector<double> means;
    double sigma = 1.0;
  };
  struct TruncatedParams {
    std::vector<double> means;
    double sigma = 1.0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<double> log_z;
  };
  struct CategoricalParams {
    std::vector<std::vector<double>> rows;
  };

  explicit LikelihoodModel(std::variant<GaussianParams, TruncatedParams, CategoricalParams> params);

  std::variant<GaussianParams, TruncatedParams, CategoricalParams> params_;
  double log_scale_ = 0.0;
};

/// One observation model per agent, all over the same hypothesis set.
class NetworkLikelihoods {
 public:
  explicit NetworkLikelihoods(std::vector<LikelihoodModel> models);
  static NetworkLikelihoods replicate(const LikelihoodModel& model, std::size_t agents);

  std::size_t agents() const { return models_.size(); }
  std::size_t hypotheses() const { return models_.front().hypotheses(); }
  const LikelihoodModel& operator[](std::size_t agent) const { return models_[agent]; }
  const std::vector<LikelihoodModel>& models() const { return models_; }

 private:
  std::vector<LikelihoodModel> models_;
};

/// C_L = max over agents of LikelihoodModel::abs_log_bound().
double log_likelihood_bound(const NetworkLikelihoods& models);

}  // namespace dhmm
