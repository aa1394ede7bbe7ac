#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracle {

std::vector<long double> path_posterior(const Matrix& kernel, const std::vector<long double>& initial,
                                        const Matrix& lik) {
  const std::size_t h = initial.size();
  const std::size_t n = lik.size();
  std::vector<long double> post(h, 0.0L);
  std::vector<std::size_t> path(n, 0);
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= h;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i) {
      path[i] = c % h;
      c /= h;
    }
    long double first = 0.0L;
    for (std::size_t t0 = 0; t0 < h; ++t0) first += kernel[path[0]][t0] * initial[t0];
    long double weight = first * lik[0][path[0]];
    for (std::size_t i = 1; i < n; ++i) weight *= kernel[path[i]][path[i - 1]] * lik[i][path[i]];
    post[path[n - 1]] += weight;
  }
  long double z = 0.0L;
  for (auto v : post) z += v;
  for (auto& v : post) v /= z;
  return post;
}

Matrix forward_filter(const Matrix& kernel, const std::vector<long double>& initial, const Matrix& lik) {
  const std::size_t h = initial.size();
  Matrix out;
  std::vector<long double> mu = initial;
  for (const auto& l : lik) {
    std::vector<long double> next(h, 0.0L);
    long double z = 0.0L;
    for (std::size_t a = 0; a < h; ++a) {
      for (std::size_t b = 0; b < h; ++b) next[a] += kernel[a][b] * mu[b];
      next[a] *= l[a];
      z += next[a];
    }
    for (auto& v : next) v /= z;
    mu = next;
    out.push_back(mu);
  }
  return out;
}

std::array<long double, 3> symmetric3_eigenvalues(const std::array<std::array<long double, 3>, 3>& m) {
  // det(m - x I) = -x^3 + c2 x^2 - c1 x + c0, solved by the trigonometric form.
  const long double c2 = m[0][0] + m[1][1] + m[2][2];
  const long double c1 = m[0][0] * m[1][1] + m[0][0] * m[2][2] + m[1][1] * m[2][2] - m[0][1] * m[1][0] -
                         m[0][2] * m[2][0] - m[1][2] * m[2][1];
  const long double c0 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  // x = y + c2/3 gives y^3 + p y + q = 0.
  const long double p = c1 - c2 * c2 / 3.0L;
  const long double q = -2.0L * c2 * c2 * c2 / 27.0L + c2 * c1 / 3.0L - c0;
  std::array<long double, 3> x{};
  if (std::fabs(p) < 1e-18L) {
    x = {c2 / 3.0L, c2 / 3.0L, c2 / 3.0L};
  } else {
    const long double r = 2.0L * std::sqrt(-p / 3.0L);
    long double arg = 3.0L * q / (p * r);
    arg = std::fmax(-1.0L, std::fmin(1.0L, arg));
    const long double phi = std::acos(arg) / 3.0L;
    for (int j = 0; j < 3; ++j) x[j] = r * std::cos(phi - 2.0L * std::numbers::pi_v<long double> * j / 3.0L) + c2 / 3.0L;
  }
  std::sort(x.begin(), x.end());
  return x;
}

long double composite_simpson(const std::function<long double(long double)>& f, long double a,
                              long double b, std::size_t n) {
  if (n % 2 != 0) throw std::invalid_argument("composite_simpson: n must be even");
  const long double h = (b - a) / static_cast<long double>(n);
  long double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0L : 2.0L) * f(a + h * static_cast<long double>(i));
  return s * h / 3.0L;
}

long double kl(const std::vector<long double>& p, const std::vector<long double>& q) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0L) continue;
    if (q[i] == 0.0L) return INFINITY;
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

namespace {
long double phi(long double z) { return 0.5L * (1.0L + std::erf(z / std::sqrt(2.0L))); }
}  // namespace

long double truncated_normal_pdf(long double x, long double mean, long double sigma, long double lo,
                                 long double hi) {
  if (x < lo || x > hi) return 0.0L;
  const long double z = phi((hi - mean) / sigma) - phi((lo - mean) / sigma);
  const long double u = (x - mean) / sigma;
  return std::exp(-0.5L * u * u) / (sigma * std::sqrt(2.0L * std::numbers::pi_v<long double>) * z);
}

long double grid_abs_log_bound(const std::vector<long double>& means, long double sigma, long double lo,
                               long double hi, std::size_t n) {
  long double best = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double x = lo + (hi - lo) * static_cast<long double>(i) / static_cast<long double>(n - 1);
    for (auto m : means) best = std::fmax(best, std::fabs(std::log(truncated_normal_pdf(x, m, sigma, lo, hi))));
  }
  return best;
}

long double grid_mixture_mode(const std::vector<long double>& prior, const std::vector<long double>& means,
                              long double sigma, long double lo, long double hi, std::size_t n) {
  long double best_x = lo;
  long double best = -1.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double x = lo + (hi - lo) * static_cast<long double>(i) / static_cast<long double>(n - 1);
    long double v = 0.0L;
    for (std::size_t t = 0; t < means.size(); ++t) {
      const long double u = (x - means[t]) / sigma;
      v += prior[t] * std::exp(-0.5L * u * u);
    }
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace oracle
