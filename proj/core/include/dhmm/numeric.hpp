#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>

namespace dhmm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(sum(exp(x))) with max subtraction. Returns -inf for an empty or
/// all -inf input.
double log_sum_exp(std::span<const double> x);

/// log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

/// Shifts `log_values` so that exp(log_values) sums to one. Returns the
/// log normalizer that was subtracted. Throws ImpossibleObservationError
/// when every entry is -inf.
double normalize_log(std::span<double> log_values);

double normal_pdf(double x, double mean, double sd);
double normal_cdf(double x);

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 50);

}  // namespace dhmm
