#pragma once

// Convergence constants for sub-sampled quantile RK and the hypothesis checks
// that make them meaningful.
//
// With w = beta / (alpha q) and d = alpha (1 - q) - beta:
//   r_G      = 1 - sigma^2 / (alpha q m)
//   r_C(s)   = 1 + 2 / sqrt(s) * smax^2 / sqrt(m d) + smax^2 / (m d)
//   r~_C     = r_C evaluated at s = beta m
//   r        = (1 - w) r_G + w r~_C
// where sigma is the smallest singular value over row subsets of relative
// size at least alpha q - beta, and smax = sigma_max(A).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sqrk/errors.hpp"
#include "sqrk/linalg.hpp"
#include "sqrk/parallel.hpp"
#include "sqrk/rng.hpp"
#include "sqrk/rounding.hpp"
#include "sqrk/solvers.hpp"

namespace sqrk {

struct RateParams {
  std::size_t m = 0;
  double alpha = 1.0;
  double q = 0.5;
  double beta = 0.0;
  double sigma_max = 0.0;
  double sigma_aqb_min = 0.0;

  void validate() const {
    if (m < 1) throw InvalidArgument("m must be positive");
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("q must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
    if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in [0, 1)");
    if (!(sigma_max >= 0.0) || !(sigma_aqb_min >= 0.0)) throw InvalidArgument("singular values must be >= 0");
  }

  double md() const noexcept { return static_cast<double>(m); }
  std::size_t corrupted_count() const noexcept { return floor_count(beta * md()); }
  bool sampling_condition() const noexcept { return alpha * q > beta; }
  bool quantile_condition() const noexcept { return alpha * (1.0 - q) > beta; }
};

struct RateReport {
  double r_G = 0.0;
  double r_C_tilde = 0.0;
  double r = 0.0;
  bool cond_sampling = false;    // alpha q > beta
  bool cond_quantile = false;    // alpha (1 - q) > beta
  bool cond_rate = false;        // r_G < (1 - w r~_C) / (1 - w)
  bool cond_rate_equiv = false;  // w + beta smax^2 / sigma^2 (2 / sqrt(beta d) + 1 / d) < 1
  bool is_convergent = false;
  bool vacuous_corruption = false;  // floor(beta m) = 0
};

inline double rate_rG(const RateParams& p) {
  p.validate();
  const double s = p.sigma_aqb_min;
  return 1.0 - s * s / (p.alpha * p.q * p.md());
}

inline double rate_rC(const RateParams& p, std::size_t s_k_size) {
  p.validate();
  if (s_k_size < 1) throw InvalidArgument("|S_k| must be at least 1");
  if (!p.quantile_condition()) throw QuantileConditionViolated();
  const double md = p.md() * (p.alpha * (1.0 - p.q) - p.beta);
  const double smax2 = p.sigma_max * p.sigma_max;
  return 1.0 + 2.0 / std::sqrt(static_cast<double>(s_k_size)) * smax2 / std::sqrt(md) + smax2 / md;
}

/// Worst case of the corrupted-branch rate. Equals 1 when floor(beta m) = 0,
/// since the corrupted branch can then never be taken.
inline double rate_rC_tilde(const RateParams& p) {
  p.validate();
  if (p.corrupted_count() == 0) return 1.0;
  if (!p.quantile_condition()) throw QuantileConditionViolated();
  const double md = p.md() * (p.alpha * (1.0 - p.q) - p.beta);
  const double smax2 = p.sigma_max * p.sigma_max;
  return 1.0 + 2.0 / std::sqrt(p.beta * p.md()) * smax2 / std::sqrt(md) + smax2 / md;
}

inline RateReport rate_r(const RateParams& p) {
  p.validate();
  RateReport rep;
  rep.cond_sampling = p.sampling_condition();
  rep.cond_quantile = p.quantile_condition();
  rep.r_G = rate_rG(p);
  rep.vacuous_corruption = p.corrupted_count() == 0;

  if (rep.vacuous_corruption) {
    rep.r_C_tilde = 1.0;
    rep.r = rep.r_G;
    rep.cond_rate = true;
    rep.cond_rate_equiv = true;
  } else if (!rep.cond_quantile) {
    rep.r_C_tilde = std::numeric_limits<double>::infinity();
    rep.r = std::numeric_limits<double>::infinity();
  } else {
    rep.r_C_tilde = rate_rC_tilde(p);
    const double w = p.beta / (p.alpha * p.q);
    rep.r = (1.0 - w) * rep.r_G + w * rep.r_C_tilde;
    if (rep.cond_sampling) {
      rep.cond_rate = rep.r_G < (1.0 - w * rep.r_C_tilde) / (1.0 - w);
      const double d = p.alpha * (1.0 - p.q) - p.beta;
      const double s2 = p.sigma_aqb_min * p.sigma_aqb_min;
      if (s2 > 0.0) {
        const double smax2 = p.sigma_max * p.sigma_max;
        rep.cond_rate_equiv =
            w + p.beta * smax2 / s2 * (2.0 / (std::sqrt(p.beta) * std::sqrt(d)) + 1.0 / d) < 1.0;
      }
    }
  }
  rep.is_convergent = rep.cond_sampling && rep.cond_quantile && rep.cond_rate && rep.r < 1.0;
  return rep;
}

/// Row-subset size used by the sampled estimator: ceil((alpha q - beta) m),
/// clamped to [1, m].
inline std::size_t sigma_subset_size(std::size_t m, double alpha, double q, double beta) {
  if (!(alpha * q > beta)) throw SamplingConditionViolated();
  const std::size_t s = ceil_count((alpha * q - beta) * static_cast<double>(m));
  return std::clamp<std::size_t>(s, 1, m);
}

/// Minimum of sigma_min(A_S) over `num_samples` uniform subsets S of size
/// ceil((alpha q - beta) m). An upper estimate of the true minimum over all
/// such subsets. Reuses `gram` so repeated calls share one A^T A.
inline double estimate_sigma_aqb_min(SubsetGram& gram, const RowNormalizedMatrix& a, double alpha, double q,
                                     double beta, std::size_t num_samples, Rng& rng) {
  if (num_samples < 1) throw InvalidArgument("need at least one subset sample");
  const std::size_t size = sigma_subset_size(a.rows(), alpha, q, beta);
  if (size < a.cols()) return 0.0;
  SubsetSampler sampler(a.rows());
  std::vector<std::size_t> rows;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < num_samples; ++t) {
    sampler.sample(size, rng, rows);
    best = std::min(best, gram.sigma_min(rows));
  }
  return best;
}

inline double estimate_sigma_aqb_min(const RowNormalizedMatrix& a, double alpha, double q, double beta,
                                     std::size_t num_samples, Rng& rng) {
  SubsetGram gram(a.inner());
  return estimate_sigma_aqb_min(gram, a, alpha, q, beta, num_samples, rng);
}

/// Smallest sigma_min(A restricted to B_k \ C) recorded across traces.
inline double estimate_sigma_from_trace(std::span<const IterateTrace> traces) {
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& trace : traces) {
    for (const auto& row : trace.rows) {
      if (std::isnan(row.sigma_min)) continue;
      best = std::min(best, row.sigma_min);
      any = true;
    }
  }
  if (!any) throw InvalidArgument("traces carry no recorded sigma values");
  return best;
}

struct HeatmapCell {
  double q = 0.0;
  double alpha = 0.0;
  bool cond_sampling = false;
  bool cond_quantile = false;
  bool cond_rate = false;
  bool satisfied = false;
  double sigma_estimate = std::numeric_limits<double>::quiet_NaN();
};

struct Heatmap {
  double beta = 0.0;
  double sigma_max = 0.0;
  std::vector<double> q_grid;
  std::vector<double> alpha_grid;
  std::vector<HeatmapCell> cells;  // row-major: cells[qi * alpha_grid.size() + ai]

  const HeatmapCell& at(std::size_t qi, std::size_t ai) const { return cells[qi * alpha_grid.size() + ai]; }
  std::size_t satisfied_count() const {
    std::size_t n = 0;
    for (const auto& c : cells) n += c.satisfied ? 1 : 0;
    return n;
  }
};

/// For each (q, alpha): true iff alpha (1 - q) > beta, alpha q > beta and the
/// rate condition holds with sigma from estimate_sigma_aqb_min. Cell (qi, ai)
/// draws from Rng(seed).split(qi, ai), so results do not depend on threads.
inline Heatmap hypothesis_heatmap(const RowNormalizedMatrix& a, double beta, std::span<const double> q_grid,
                                  std::span<const double> alpha_grid, std::size_t num_samples,
                                  std::uint64_t seed, std::size_t threads = default_thread_count(),
                                  std::optional<double> known_sigma_max = std::nullopt) {
  if (q_grid.empty() || alpha_grid.empty()) throw InvalidArgument("heatmap grids must be nonempty");
  Heatmap map;
  map.beta = beta;
  map.q_grid.assign(q_grid.begin(), q_grid.end());
  map.alpha_grid.assign(alpha_grid.begin(), alpha_grid.end());
  map.sigma_max = known_sigma_max ? *known_sigma_max : sigma_max(a);
  map.cells.resize(q_grid.size() * alpha_grid.size());

  const SubsetGram shared_gram(a.inner());
  const Rng root(seed);
  const std::size_t width = alpha_grid.size();
  parallel_for(map.cells.size(), threads, [&](std::size_t idx) {
    const std::size_t qi = idx / width;
    const std::size_t ai = idx % width;
    HeatmapCell& cell = map.cells[idx];
    cell.q = q_grid[qi];
    cell.alpha = alpha_grid[ai];
    const bool valid = cell.q > 0.0 && cell.q < 1.0 && cell.alpha > 0.0 && cell.alpha <= 1.0;
    if (!valid) return;
    cell.cond_sampling = cell.alpha * cell.q > beta;
    cell.cond_quantile = cell.alpha * (1.0 - cell.q) > beta;
    if (!cell.cond_sampling || !cell.cond_quantile) return;

    SubsetGram gram = shared_gram;
    Rng rng = root.split(qi, ai);
    cell.sigma_estimate = estimate_sigma_aqb_min(gram, a, cell.alpha, cell.q, beta, num_samples, rng);
    const RateReport rep =
        rate_r({a.rows(), cell.alpha, cell.q, beta, map.sigma_max, cell.sigma_estimate});
    cell.cond_rate = rep.cond_rate;
    cell.satisfied = rep.cond_sampling && rep.cond_quantile && rep.cond_rate;
  });
  return map;
}

}  // namespace sqrk
