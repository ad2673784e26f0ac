#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sqrk/errors.hpp"
#include "sqrk/linalg.hpp"
#include "sqrk/rounding.hpp"

namespace sqrk {

enum class ThresholdMode { kStrict, kInclusive };

/// k = floor(q * size), the 1-based rank picked by q_quantile.
inline std::size_t quantile_rank(double q, std::size_t size) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  return floor_count(q * static_cast<double>(size));
}

/// q-quantile of a multiset: its k-th smallest element, k = floor(q |S|).
/// For distinct values this is the unique s with |{r <= s}| = k. Reorders
/// `scratch` in place; O(|S|) expected via std::nth_element (introselect).
inline double q_quantile_inplace(std::span<double> scratch, double q) {
  if (scratch.empty()) throw EmptySampleError();
  const std::size_t k = quantile_rank(q, scratch.size());
  if (k == 0) throw QuantileIndexZeroError(q, scratch.size());
  auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

inline double q_quantile(std::span<const double> values, double q) {
  std::vector<double> scratch(values.begin(), values.end());
  return q_quantile_inplace(scratch, q);
}

/// Indices whose magnitude passes gamma: `< gamma` in strict mode, `<= gamma`
/// in inclusive mode. `indices` and `magnitudes` are parallel; `indices`
/// must be increasing so the result is too.
inline void threshold_indices(std::span<const std::size_t> indices, std::span<const double> magnitudes,
                              double gamma, ThresholdMode mode, std::vector<std::size_t>& out) {
  out.clear();
  if (mode == ThresholdMode::kStrict) {
    for (std::size_t k = 0; k < indices.size(); ++k)
      if (magnitudes[k] < gamma) out.push_back(indices[k]);
  } else {
    for (std::size_t k = 0; k < indices.size(); ++k)
      if (magnitudes[k] <= gamma) out.push_back(indices[k]);
  }
}

inline IndexSet threshold_set(const IndexSet& sample, std::span<const double> magnitudes, double gamma,
                              ThresholdMode mode = ThresholdMode::kInclusive) {
  if (sample.size() != magnitudes.size()) throw InvalidArgument("threshold_set: size mismatch");
  if (!std::isfinite(gamma)) throw InvalidArgument("threshold_set: gamma must be finite");
  std::vector<std::size_t> accepted;
  threshold_indices(sample.indices(), magnitudes, gamma, mode, accepted);
  if (accepted.empty()) throw EmptyAcceptedSetError();
  return IndexSet::from_sorted(std::move(accepted), sample.universe());
}

}  // namespace sqrk
