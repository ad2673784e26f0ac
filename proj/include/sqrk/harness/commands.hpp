#pragma once

// The experiment commands behind the `sqrk` CLI. Each takes a plain options
// struct, writes its files, and returns what it computed so tests can
// inspect results without parsing output.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sqrk/harness/csv.hpp"
#include "sqrk/harness/experiment.hpp"
#include "sqrk/harness/svg_plot.hpp"
#include "sqrk/problem.hpp"
#include "sqrk/system_io.hpp"
#include "sqrk/theory.hpp"

namespace sqrk::harness {

inline constexpr std::size_t kDeskRows = 5000;
inline constexpr std::size_t kDeskCols = 50;
inline constexpr std::size_t kPaperRows = 50000;
inline constexpr std::size_t kPaperCols = 100;

/// Either a stored system file or a generation spec.
struct SystemSource {
  std::optional<std::filesystem::path> path;
  GenSpec spec;
};

inline CorruptedSystem load_or_generate(const SystemSource& src) {
  return src.path ? load_system(*src.path) : gen_gaussian_system(src.spec);
}

/// Seed of the c-th configuration in a run list.
inline std::uint64_t config_seed(std::uint64_t seed, std::size_t c) { return Rng(seed).split(0xC0F1, c).key(); }

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  GenSpec spec;
  std::filesystem::path output = "system.bin";
  std::optional<std::filesystem::path> csv;
};

struct GenReport {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t corrupted = 0;
  std::uint64_t seed = 0;
};

inline GenReport cmd_gen(const GenOptions& opts) {
  const CorruptedSystem sys = gen_gaussian_system(opts.spec);
  if (opts.output.has_parent_path()) std::filesystem::create_directories(opts.output.parent_path());
  save_system(opts.output, sys);
  if (opts.csv) {
    auto out = open_output(*opts.csv);
    write_system_csv(out, sys);
  }
  return {sys.rows(), sys.cols(), sys.corrupt_support().size(), sys.seed()};
}

// ---------------------------------------------------------------------------
// solve / vary-q

struct SolveOptions {
  SystemSource system;
  Variant variant = Variant::kSQRK;
  std::vector<double> alphas{1.0, 0.5, 0.15};
  std::vector<double> qs{0.9};
  std::vector<std::size_t> lambdas{11};
  std::size_t iters = 1000;
  std::uint64_t seed = 1;
  X0Policy x0 = X0Policy::kZero;
  ThresholdMode threshold_mode = ThresholdMode::kInclusive;
  ExperimentOptions experiment;
  std::filesystem::path output_dir = "out";
};

inline std::string config_label(const SolverConfig& cfg) {
  switch (cfg.variant) {
    case Variant::kRK: return "rk";
    case Variant::kQRK: return "qrk_q" + short_number(cfg.q);
    case Variant::kSQRK: return "sqrk_a" + short_number(cfg.alpha) + "_q" + short_number(cfg.q);
    case Variant::kSSQRK: return "ssqrk_l" + std::to_string(cfg.lambda) + "_q" + short_number(cfg.q);
  }
  return "?";
}

inline SolverConfig base_config(const SolveOptions& opts) {
  SolverConfig cfg;
  cfg.variant = opts.variant;
  cfg.max_iters = opts.iters;
  cfg.x0_policy = opts.x0;
  cfg.threshold_mode = opts.threshold_mode;
  return cfg;
}

/// Configurations in (q outer, alpha/lambda inner) order.
inline std::vector<ConfigRun> expand_runs(const SolveOptions& opts) {
  std::vector<ConfigRun> runs;
  auto add = [&](SolverConfig cfg) {
    cfg.seed = config_seed(opts.seed, runs.size());
    runs.push_back({config_label(cfg), cfg});
  };
  SolverConfig cfg = base_config(opts);
  switch (opts.variant) {
    case Variant::kRK:
      add(cfg);
      break;
    case Variant::kQRK:
      for (double q : opts.qs) { cfg.q = q; add(cfg); }
      break;
    case Variant::kSQRK:
      for (double q : opts.qs)
        for (double a : opts.alphas) { cfg.q = q; cfg.alpha = a; add(cfg); }
      break;
    case Variant::kSSQRK:
      for (double q : opts.qs)
        for (std::size_t l : opts.lambdas) { cfg.q = q; cfg.lambda = l; add(cfg); }
      break;
  }
  return runs;
}

inline std::string system_title(const CorruptedSystem& sys) {
  return "m=" + std::to_string(sys.rows()) + " n=" + std::to_string(sys.cols()) + " beta=" + short_number(sys.beta()) +
         " |C|=" + std::to_string(sys.corrupt_support().size());
}

inline std::vector<ConfigResult> cmd_solve(const SolveOptions& opts) {
  const CorruptedSystem sys = load_or_generate(opts.system);
  const auto runs = expand_runs(opts);
  PlotGroup all{"", system_title(sys), {}};
  for (std::size_t i = 0; i < runs.size(); ++i) all.members.push_back(i);
  return run_experiment(sys, runs, opts.experiment, opts.output_dir, {all});
}

/// SQRK over every (alpha, q) pair; one pair of plots per alpha.
inline std::vector<ConfigResult> cmd_vary_q(SolveOptions opts) {
  opts.variant = Variant::kSQRK;
  const CorruptedSystem sys = load_or_generate(opts.system);

  std::vector<ConfigRun> runs;
  std::vector<PlotGroup> groups;
  SolverConfig cfg = base_config(opts);
  for (double a : opts.alphas) {
    PlotGroup group{"_alpha" + short_number(a), system_title(sys) + " alpha=" + short_number(a), {}};
    for (double q : opts.qs) {
      cfg.alpha = a;
      cfg.q = q;
      cfg.seed = config_seed(opts.seed, runs.size());
      group.members.push_back(runs.size());
      runs.push_back({config_label(cfg), cfg});
    }
    groups.push_back(std::move(group));
  }
  return run_experiment(sys, runs, opts.experiment, opts.output_dir, groups);
}

// ---------------------------------------------------------------------------
// small-sample

enum class QuantileMode { kSmallest, kMedian, kSecondLargest };

inline const char* to_string(QuantileMode m) {
  switch (m) {
    case QuantileMode::kSmallest: return "smallest";
    case QuantileMode::kMedian: return "median";
    case QuantileMode::kSecondLargest: return "second_largest";
  }
  return "?";
}

/// q = 1/lambda, 1/2 or (lambda - 1)/lambda.
inline double mode_quantile(QuantileMode mode, std::size_t lambda) {
  const double l = static_cast<double>(lambda);
  switch (mode) {
    case QuantileMode::kSmallest: return 1.0 / l;
    case QuantileMode::kMedian: return 0.5;
    case QuantileMode::kSecondLargest: return (l - 1.0) / l;
  }
  return 0.5;
}

struct SmallSampleOptions {
  SystemSource system;
  std::vector<std::size_t> lambdas{3, 11, 51};
  std::vector<QuantileMode> modes{QuantileMode::kSmallest, QuantileMode::kMedian, QuantileMode::kSecondLargest};
  std::optional<double> event_q = 0.5;
  std::size_t iters = 2000;
  std::uint64_t seed = 1;
  X0Policy x0 = X0Policy::kZero;
  ExperimentOptions experiment;
  std::filesystem::path output_dir = "out";
};

struct EventSummary {
  std::string label;
  std::size_t lambda = 0;
  QuantileMode mode = QuantileMode::kMedian;
  double q = 0.0;
  bool feasible = false;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0;  // frequencies over all trials and iterations
};

struct SmallSampleReport {
  std::vector<ConfigResult> results;
  std::vector<EventSummary> events;
};

inline SmallSampleReport cmd_small_sample(const SmallSampleOptions& opts) {
  const CorruptedSystem sys = load_or_generate(opts.system);
  ExperimentOptions exp = opts.experiment;
  exp.bound_overlay = false;

  SmallSampleReport report;
  std::vector<ConfigRun> runs;
  std::vector<PlotGroup> groups;
  std::vector<std::size_t> run_of_event;
  for (QuantileMode mode : opts.modes) {
    PlotGroup group{std::string("_") + to_string(mode), system_title(sys) + " q mode=" + to_string(mode), {}};
    for (std::size_t lambda : opts.lambdas) {
      EventSummary ev;
      ev.lambda = lambda;
      ev.mode = mode;
      ev.q = mode_quantile(mode, lambda);
      ev.label = "ssqrk_l" + std::to_string(lambda) + "_" + to_string(mode);
      ev.feasible = lambda >= 1 && lambda <= sys.rows() && ev.q > 0.0 && ev.q < 1.0 &&
                    floor_count(ev.q * static_cast<double>(lambda)) >= 1;
      if (ev.feasible) {
        SolverConfig cfg;
        cfg.variant = Variant::kSSQRK;
        cfg.lambda = lambda;
        cfg.q = ev.q;
        cfg.max_iters = opts.iters;
        cfg.x0_policy = opts.x0;
        cfg.event_quantile = opts.event_q;
        cfg.seed = config_seed(opts.seed, runs.size());
        group.members.push_back(runs.size());
        run_of_event.push_back(runs.size());
        runs.push_back({ev.label, cfg});
      } else {
        run_of_event.push_back(static_cast<std::size_t>(-1));
      }
      report.events.push_back(ev);
    }
    if (!group.members.empty()) groups.push_back(std::move(group));
  }

  report.results = run_experiment(sys, runs, exp, opts.output_dir, groups);

  for (std::size_t e = 0; e < report.events.size(); ++e) {
    if (run_of_event[e] == static_cast<std::size_t>(-1)) continue;
    auto& ev = report.events[e];
    std::size_t counts[4] = {0, 0, 0, 0};
    std::size_t total = 0;
    for (const auto& tr : report.results[run_of_event[e]].trials)
      for (const auto& row : tr.rows) {
        ++counts[static_cast<int>(row.event)];
        ++total;
      }
    if (total > 0 && opts.event_q) {
      ev.e1 = static_cast<double>(counts[1]) / static_cast<double>(total);
      ev.e2 = static_cast<double>(counts[2]) / static_cast<double>(total);
      ev.e3 = static_cast<double>(counts[3]) / static_cast<double>(total);
    } else {
      ev.e1 = ev.e2 = ev.e3 = std::numeric_limits<double>::quiet_NaN();
    }
  }

  auto out = open_output(opts.output_dir / "events.csv");
  out << "label,lambda,mode,q,feasible,e1_freq,e2_freq,e3_freq\n";
  for (const auto& ev : report.events) {
    out << ev.label << ',' << ev.lambda << ',' << to_string(ev.mode) << ',' << csv_number(ev.q) << ','
        << csv_bool(ev.feasible) << ',' << (ev.feasible ? csv_number(ev.e1) : "") << ','
        << (ev.feasible ? csv_number(ev.e2) : "") << ',' << (ev.feasible ? csv_number(ev.e3) : "") << '\n';
  }
  return report;
}

// ---------------------------------------------------------------------------
// heatmap

struct HeatmapOptions {
  SystemSource system;  // only the matrix is used; beta comes from `betas`
  std::vector<double> betas{1e-5, 1e-4, 1e-3, 1e-2};
  std::vector<double> q_grid{0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95};
  std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  std::size_t threads = default_thread_count();
  std::filesystem::path output_dir = "out";
};

inline void write_heatmap_csv(std::ostream& out, const Heatmap& map) {
  out << "q,alpha,cond_sampling,cond_quantile,cond_rate,satisfied\n";
  for (const auto& c : map.cells) {
    out << csv_number(c.q) << ',' << csv_number(c.alpha) << ',' << csv_bool(c.cond_sampling) << ','
        << csv_bool(c.cond_quantile) << ',' << csv_bool(c.cond_rate) << ',' << csv_bool(c.satisfied) << '\n';
  }
}

inline std::vector<Heatmap> cmd_heatmap(const HeatmapOptions& opts) {
  SystemSource src = opts.system;
  src.spec.beta = 0.0;
  const CorruptedSystem sys = load_or_generate(src);
  const double smax = sigma_max(sys.a());
  std::filesystem::create_directories(opts.output_dir);

  std::vector<Heatmap> maps;
  auto summary = open_output(opts.output_dir / "heatmap_summary.csv");
  summary << "beta,corrupted,satisfied_cells,total_cells\n";
  for (std::size_t b = 0; b < opts.betas.size(); ++b) {
    const double beta = opts.betas[b];
    Heatmap map = hypothesis_heatmap(sys.a(), beta, opts.q_grid, opts.alpha_grid, opts.samples,
                                     Rng(opts.seed).split(b).key(), opts.threads, smax);
    const std::string name = "heatmap_beta_" + short_number(beta);
    {
      auto out = open_output(opts.output_dir / (name + ".csv"));
      write_heatmap_csv(out, map);
    }
    std::vector<bool> cells;
    for (const auto& c : map.cells) cells.push_back(c.satisfied);
    write_text_file(opts.output_dir / (name + ".svg"),
                    render_bool_grid("beta = " + short_number(beta) + ", m = " + std::to_string(sys.rows()), "q",
                                     map.q_grid, "alpha", map.alpha_grid, cells));
    summary << csv_number(beta) << ',' << floor_count(beta * static_cast<double>(sys.rows())) << ','
            << map.satisfied_count() << ',' << map.cells.size() << '\n';
    maps.push_back(std::move(map));
  }
  return maps;
}

// ---------------------------------------------------------------------------
// rate

inline std::string format_rate_report(const RateParams& p, const RateReport& r) {
  std::ostringstream out;
  out.precision(12);
  out << "m = " << p.m << "\nalpha = " << p.alpha << "\nq = " << p.q << "\nbeta = " << p.beta
      << "\nsigma_max = " << p.sigma_max << "\nsigma_aqb_min = " << p.sigma_aqb_min << "\nr_G = " << r.r_G
      << "\nr_C_tilde = " << r.r_C_tilde << "\nr = " << r.r << std::boolalpha
      << "\ncond_sampling = " << r.cond_sampling << "\ncond_quantile = " << r.cond_quantile
      << "\ncond_rate = " << r.cond_rate << "\ncond_rate_equiv = " << r.cond_rate_equiv
      << "\nvacuous_corruption = " << r.vacuous_corruption << "\nis_convergent = " << r.is_convergent << '\n';
  return out.str();
}

}  // namespace sqrk::harness
