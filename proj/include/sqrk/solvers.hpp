#pragma once

// Randomized Kaczmarz and its quantile-screened variants.
//
//   RK     project onto a uniformly random row.
//   QRK    threshold at the q-quantile of all m residual magnitudes, project
//          onto a uniform row among those passing.
//   SQRK   same, but the quantile and the candidate pool come from a uniform
//          sample of ceil(alpha m) rows.
//   SSQRK  sample lambda rows and project onto the row whose residual
//          magnitude *is* the sample q-quantile.
//
// Every step updates the iterate in place and returns one TraceRow.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqrk/errors.hpp"
#include "sqrk/linalg.hpp"
#include "sqrk/problem.hpp"
#include "sqrk/quantile.hpp"
#include "sqrk/rng.hpp"
#include "sqrk/rounding.hpp"

namespace sqrk {

enum class Variant { kRK, kQRK, kSQRK, kSSQRK };
enum class X0Policy { kZero, kGaussianUnit };

/// Classification of a selected row against the q'-quantile of the full
/// residual: E1 corrupted and above it, E2 corrupted and at/below it, E3
/// uncorrupted.
enum class Event : std::uint8_t { kNone, kE1, kE2, kE3 };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::kRK: return "rk";
    case Variant::kQRK: return "qrk";
    case Variant::kSQRK: return "sqrk";
    case Variant::kSSQRK: return "ssqrk";
  }
  return "?";
}

inline const char* to_string(Event e) {
  switch (e) {
    case Event::kE1: return "E1";
    case Event::kE2: return "E2";
    case Event::kE3: return "E3";
    case Event::kNone: return "";
  }
  return "";
}

struct SolverConfig {
  Variant variant = Variant::kSQRK;
  double q = 0.9;
  double alpha = 1.0;        // SQRK only; QRK always uses 1
  std::size_t lambda = 11;   // SSQRK sample size
  std::size_t max_iters = 1000;
  std::uint64_t seed = 0;
  X0Policy x0_policy = X0Policy::kZero;
  ThresholdMode threshold_mode = ThresholdMode::kInclusive;
  bool record_sigma_trace = false;
  // Throws QuantileBoundViolated if a threshold ever exceeds
  // sigma_max ||x - x*|| / sqrt(m (alpha (1 - q) - beta)).
  bool check_quantile_bound = false;
  // q' for E1/E2/E3 classification; costs a full residual scan per step.
  std::optional<double> event_quantile;
  int max_resamples = 100;

  double effective_alpha() const noexcept { return variant == Variant::kQRK ? 1.0 : alpha; }

  /// |tau_k| for a system with m rows.
  std::size_t sample_size(std::size_t m) const {
    switch (variant) {
      case Variant::kRK: return 1;
      case Variant::kQRK: return m;
      case Variant::kSQRK: return std::min(m, ceil_count(alpha * static_cast<double>(m)));
      case Variant::kSSQRK: return lambda;
    }
    return 0;
  }

  void validate(std::size_t m) const {
    if (variant == Variant::kRK) return;
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("q must lie in (0, 1)");
    if (variant == Variant::kSQRK && !(alpha > 0.0 && alpha <= 1.0))
      throw InvalidArgument("alpha must lie in (0, 1]");
    if (variant == Variant::kSSQRK && (lambda < 1 || lambda > m))
      throw InvalidArgument("lambda must lie in [1, m]");
    const std::size_t tau = sample_size(m);
    if (tau < 1) throw InvalidArgument("ceil(alpha m) must be at least 1");
    if (quantile_rank(q, tau) < 1) throw QuantileIndexZeroError(q, tau);
    if (event_quantile && quantile_rank(*event_quantile, m) < 1) throw QuantileIndexZeroError(*event_quantile, m);
    if (max_resamples < 0) throw InvalidArgument("max_resamples must be non-negative");
  }
};

struct TraceRow {
  std::size_t iter = 0;
  double elapsed_seconds = 0.0;
  double sq_error = 0.0;
  std::size_t selected_row = 0;
  bool selected_corrupted = false;
  std::size_t accepted_count = 0;            // |B_k| (SSQRK: rows attaining gamma)
  std::size_t accepted_corrupted_count = 0;  // |S_k| = |B_k n C|
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double sigma_min = std::numeric_limits<double>::quiet_NaN();  // of A restricted to B_k \ C
  std::size_t resamples = 0;
  Event event = Event::kNone;
};

struct IterateTrace {
  double initial_sq_error = 0.0;
  std::vector<TraceRow> rows;
  double sigma_running_min = std::numeric_limits<double>::quiet_NaN();
};

struct SolveResult {
  Vector x;
  IterateTrace trace;
};

enum class RowCheck { kRequireUnit, kGeneral };

/// Moves x onto the hyperplane <a, x> = b_hat in place; returns the residual
/// b_hat - <a, x> that was removed. Assumes a unit row.
inline double project_unit_inplace(std::span<double> x, std::span<const double> a, double b_hat) noexcept {
  const double step = b_hat - dot(a, x);
  for (std::size_t j = 0; j < x.size(); ++j) x[j] += step * a[j];
  return step;
}

/// Orthogonal projection of x onto {y : <a, y> = b_hat}.
inline Vector project(std::span<const double> x, std::span<const double> a, double b_hat,
                      RowCheck check = RowCheck::kRequireUnit) {
  if (x.size() != a.size()) throw InvalidArgument("project: dimension mismatch");
  const double norm2 = squared_norm(a);
  Vector out(x.begin(), x.end());
  if (check == RowCheck::kRequireUnit) {
    if (std::fabs(std::sqrt(norm2) - 1.0) > 1e-10) throw NonUnitRowError("project: row is not unit norm");
    project_unit_inplace(out, a, b_hat);
    return out;
  }
  if (!(norm2 > 0.0)) throw ZeroRowError(0);
  const double step = (b_hat - dot(a, x)) / norm2;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += step * a[j];
  return out;
}

/// E3 for uncorrupted rows; otherwise E1 if |residual| exceeds the
/// q'-quantile of all |residuals|, else E2.
inline Event classify_event(std::size_t selected_row, std::span<const double> full_residuals, double q_prime,
                            const IndexSet& corrupted) {
  if (selected_row >= full_residuals.size()) throw InvalidArgument("classify_event: row out of range");
  if (!corrupted.contains(selected_row)) return Event::kE3;
  std::vector<double> magnitudes(full_residuals.size());
  for (std::size_t i = 0; i < magnitudes.size(); ++i) magnitudes[i] = std::fabs(full_residuals[i]);
  const double selected = magnitudes[selected_row];
  const double gamma = q_quantile_inplace(magnitudes, q_prime);
  return selected > gamma ? Event::kE1 : Event::kE2;
}

/// Reusable buffers for the step functions. After a quantile step,
/// `accepted` holds B_k (increasing).
struct StepWorkspace {
  explicit StepWorkspace(std::size_t m) : sampler(m) {}

  SubsetSampler sampler;
  std::vector<std::size_t> sample;
  std::vector<std::size_t> accepted;
  Vector magnitudes;
  Vector scratch;
};

inline TraceRow rk_step(const CorruptedSystem& sys, Vector& x, Rng& rng) {
  TraceRow row;
  const std::size_t i = rng.uniform_index(sys.rows());
  project_unit_inplace(x, sys.a().row(i), sys.b_hat()[i]);
  row.selected_row = i;
  row.selected_corrupted = sys.is_corrupted(i);
  return row;
}

namespace detail {

inline void draw_sample(const CorruptedSystem& sys, std::size_t size, Rng& rng, StepWorkspace& ws) {
  const std::size_t m = sys.rows();
  if (size == m) {
    // The only subset of size m; no draws needed.
    ws.sample.resize(m);
    for (std::size_t i = 0; i < m; ++i) ws.sample[i] = i;
    return;
  }
  ws.sampler.sample(size, rng, ws.sample);
}

inline void sample_magnitudes(const CorruptedSystem& sys, std::span<const double> x, StepWorkspace& ws) {
  const auto b_hat = sys.b_hat();
  ws.magnitudes.resize(ws.sample.size());
  for (std::size_t k = 0; k < ws.sample.size(); ++k) {
    const std::size_t i = ws.sample[k];
    ws.magnitudes[k] = std::fabs(dot(sys.a().row(i), x) - b_hat[i]);
  }
  ws.scratch.assign(ws.magnitudes.begin(), ws.magnitudes.end());
}

}  // namespace detail

/// One sub-sampled quantile step. QRK is the alpha = 1 case. In strict
/// mode an empty B_k triggers a fresh sample (at most max_resamples times).
inline TraceRow sqrk_step(const CorruptedSystem& sys, Vector& x, const SolverConfig& cfg, Rng& rng,
                          StepWorkspace& ws) {
  TraceRow row;
  const std::size_t tau = cfg.sample_size(sys.rows());
  for (;;) {
    detail::draw_sample(sys, tau, rng, ws);
    detail::sample_magnitudes(sys, x, ws);
    row.gamma = q_quantile_inplace(ws.scratch, cfg.q);
    threshold_indices(ws.sample, ws.magnitudes, row.gamma, cfg.threshold_mode, ws.accepted);
    if (!ws.accepted.empty()) break;
    if (static_cast<int>(row.resamples) >= cfg.max_resamples) throw EmptyAcceptedSetError();
    ++row.resamples;
  }

  row.accepted_count = ws.accepted.size();
  for (std::size_t i : ws.accepted) row.accepted_corrupted_count += sys.is_corrupted(i) ? 1 : 0;
  const std::size_t i = ws.accepted[rng.uniform_index(ws.accepted.size())];
  project_unit_inplace(x, sys.a().row(i), sys.b_hat()[i]);
  row.selected_row = i;
  row.selected_corrupted = sys.is_corrupted(i);
  return row;
}

inline TraceRow sqrk_step(const CorruptedSystem& sys, Vector& x, const SolverConfig& cfg, Rng& rng) {
  StepWorkspace ws(sys.rows());
  return sqrk_step(sys, x, cfg, rng, ws);
}

/// One small-sample step: the row whose residual magnitude equals the
/// sample q-quantile is chosen, ties uniformly at random.
inline TraceRow ssqrk_step(const CorruptedSystem& sys, Vector& x, const SolverConfig& cfg, Rng& rng,
                           StepWorkspace& ws) {
  TraceRow row;
  detail::draw_sample(sys, cfg.lambda, rng, ws);
  detail::sample_magnitudes(sys, x, ws);
  row.gamma = q_quantile_inplace(ws.scratch, cfg.q);

  ws.accepted.clear();
  for (std::size_t k = 0; k < ws.sample.size(); ++k)
    if (ws.magnitudes[k] == row.gamma) ws.accepted.push_back(ws.sample[k]);

  row.accepted_count = ws.accepted.size();
  for (std::size_t i : ws.accepted) row.accepted_corrupted_count += sys.is_corrupted(i) ? 1 : 0;
  const std::size_t i =
      ws.accepted.size() == 1 ? ws.accepted.front() : ws.accepted[rng.uniform_index(ws.accepted.size())];
  project_unit_inplace(x, sys.a().row(i), sys.b_hat()[i]);
  row.selected_row = i;
  row.selected_corrupted = sys.is_corrupted(i);
  return row;
}

inline TraceRow ssqrk_step(const CorruptedSystem& sys, Vector& x, const SolverConfig& cfg, Rng& rng) {
  StepWorkspace ws(sys.rows());
  return ssqrk_step(sys, x, cfg, rng, ws);
}

inline Vector initial_iterate(std::size_t n, const SolverConfig& cfg) {
  if (cfg.x0_policy == X0Policy::kZero) return Vector(n, 0.0);
  Rng x0_rng = Rng(cfg.seed).split(1);
  return gaussian_unit_vector(n, x0_rng);
}

/// Runs cfg.max_iters steps from x0 and records one TraceRow per step.
/// Elapsed time excludes the sigma, event and bound bookkeeping.
inline SolveResult solve(const CorruptedSystem& sys, const SolverConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  const std::size_t m = sys.rows();
  cfg.validate(m);

  SolveResult result;
  result.x = initial_iterate(sys.cols(), cfg);
  auto& trace = result.trace;
  trace.initial_sq_error = squared_distance(result.x, sys.x_star());
  trace.rows.reserve(cfg.max_iters);

  Rng rng = Rng(cfg.seed).split(0);
  StepWorkspace ws(m);
  const bool quantile_variant = cfg.variant == Variant::kQRK || cfg.variant == Variant::kSQRK;
  std::optional<SubsetGram> gram;
  if (cfg.record_sigma_trace && quantile_variant) gram.emplace(sys.a().inner());

  // Threshold bound: sigma_max / sqrt(m (alpha (1 - q) - beta)).
  double bound_factor = std::numeric_limits<double>::infinity();
  if (cfg.check_quantile_bound && quantile_variant) {
    const double slack = cfg.effective_alpha() * (1.0 - cfg.q) - sys.beta();
    if (slack > 0.0) bound_factor = sigma_max(sys.a()) / std::sqrt(static_cast<double>(m) * slack);
  }

  Vector full_residuals;
  std::vector<std::size_t> uncorrupted_accepted;
  double previous_sq_error = trace.initial_sq_error;
  Clock::duration excluded{0};
  const auto start = Clock::now();

  for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
    if (cfg.event_quantile) {
      const auto t0 = Clock::now();
      full_residuals.resize(m);
      for (std::size_t i = 0; i < m; ++i) full_residuals[i] = dot(sys.a().row(i), result.x) - sys.b_hat()[i];
      excluded += Clock::now() - t0;
    }

    TraceRow row;
    switch (cfg.variant) {
      case Variant::kRK: row = rk_step(sys, result.x, rng); break;
      case Variant::kQRK:
      case Variant::kSQRK: row = sqrk_step(sys, result.x, cfg, rng, ws); break;
      case Variant::kSSQRK: row = ssqrk_step(sys, result.x, cfg, rng, ws); break;
    }
    const auto stepped = Clock::now();
    row.iter = k;
    row.elapsed_seconds = std::chrono::duration<double>(stepped - start - excluded).count();
    row.sq_error = squared_distance(result.x, sys.x_star());

    if (cfg.event_quantile) row.event = classify_event(row.selected_row, full_residuals, *cfg.event_quantile,
                                                       sys.corrupt_support());

    if (cfg.check_quantile_bound && row.gamma > bound_factor * std::sqrt(previous_sq_error) + 1e-9) {
      throw QuantileBoundViolated("threshold " + std::to_string(row.gamma) + " exceeds quantile bound at iteration " +
                                  std::to_string(k));
    }

    if (gram) {
      uncorrupted_accepted.clear();
      for (std::size_t i : ws.accepted)
        if (!sys.is_corrupted(i)) uncorrupted_accepted.push_back(i);
      row.sigma_min = uncorrupted_accepted.empty() ? 0.0 : gram->sigma_min(uncorrupted_accepted);
      if (!(trace.sigma_running_min <= row.sigma_min)) trace.sigma_running_min = row.sigma_min;
    }

    previous_sq_error = row.sq_error;
    trace.rows.push_back(row);
    excluded += Clock::now() - stepped;
  }
  return result;
}

}  // namespace sqrk
