#include "dhmm/analysis/steady_state.hpp"

#include <algorithm>
#include <vector>

#include "dhmm/errors.hpp"

namespace dhmm::analysis {

SteadyState steady_state(std::span<const double> series, std::size_t window, double tol) {
  if (window == 0) throw ValidationError("steady state: window must be positive");
  if (series.size() < 2 * window) {
    throw ValidationError("steady state: series of length " + std::to_string(series.size()) +
                          " is shorter than twice the window " + std::to_string(window));
  }
  const std::size_t n = series.size();
  // means[j] averages series[j - window + 1 .. j].
  std::vector<double> means(n, 0.0);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    acc += series[j];
    if (j >= window) acc -= series[j - window];
    means[j] = acc / static_cast<double>(window);
  }
  auto spread_ok = [&](std::size_t j) {
    const auto first = means.begin() + static_cast<std::ptrdiff_t>(j + 1 - window);
    const auto last = means.begin() + static_cast<std::ptrdiff_t>(j + 1);
    const auto [lo, hi] = std::minmax_element(first, last);
    return *hi - *lo < tol;
  };

  SteadyState out;
  double tail = 0.0;
  for (std::size_t j = n - window; j < n; ++j) tail += series[j];
  out.limit = tail / static_cast<double>(window);
  out.converged = spread_ok(n - 1);
  for (std::size_t j = 2 * window - 2; j < n; ++j) {
    if (spread_ok(j)) {
      out.converged_at = j + 1;
      break;
    }
  }
  return out;
}

}  // namespace dhmm::analysis
