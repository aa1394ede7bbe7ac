#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace dhmm::analysis {

struct SteadyState {
  /// Mean of the final `window` entries.
  double limit = 0.0;
  bool converged = false;
  /// 1-based step at which the criterion first held, if it did.
  std::optional<std::size_t> converged_at;
};

/// Windowed means m_j over `window` consecutive entries. The series counts
/// as converged at step j when the spread max - min of m over the `window`
/// steps ending at j is below `tol`; the flag reports whether this holds at
/// the final step. Throws ValidationError when the series is shorter than
/// 2 * window.
SteadyState steady_state(std::span<const double> series, std::size_t window = 50,
                         double tol = 0.01);

}  // namespace dhmm::analysis
