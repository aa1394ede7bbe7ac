#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dhmm::analysis {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double half_width() const { return 0.5 * (upper - lower); }
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = kZ95);

/// Streaming mean and variance (Welford), mergeable in a fixed order.
class RunningMoments {
 public:
  void add(double x);
  void merge(const RunningMoments& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const;
  double standard_error() const;
  /// Normal-approximation half width at level z.
  double half_width(double z = kZ95) const { return z * standard_error(); }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

double sample_mean(std::span<const double> x);
double sample_variance(std::span<const double> x);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace dhmm::analysis
