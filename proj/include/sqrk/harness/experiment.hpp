#pragma once

// Multi-trial runs of one or more solver configurations on a shared system,
// with mean curves, optional rate-bound overlays, and CSV/SVG output.
//
// Output files (all CSVs have a header row):
//   trace_<label>.csv   trial,iter,time_s,sq_error,gamma,accepted,accepted_corrupt,
//                       selected_row,selected_corrupt,event
//   mean_<label>.csv    iter,mean_sq_error,bound_or_empty,time_s
//   summary.csv         one row per configuration: parameters, sigma estimates, rates
//   timing.csv          label,percentile,time_s (per-trial total wall clock)
//   error_vs_time<suffix>.svg, error_vs_iter<suffix>.svg
//
// Every column except time_s is a deterministic function of the seeds.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sqrk/harness/csv.hpp"
#include "sqrk/harness/svg_plot.hpp"
#include "sqrk/parallel.hpp"
#include "sqrk/problem.hpp"
#include "sqrk/solvers.hpp"
#include "sqrk/theory.hpp"

namespace sqrk::harness {

enum class SigmaSource { kSampled, kTrace };

inline const char* to_string(SigmaSource s) { return s == SigmaSource::kTrace ? "trace" : "sampled"; }

struct ConfigRun {
  std::string label;
  SolverConfig config;
};

struct ExperimentOptions {
  std::size_t trials = 10;
  bool bound_overlay = true;
  SigmaSource sigma_source = SigmaSource::kTrace;
  std::size_t sigma_samples = 100;
  std::size_t threads = default_thread_count();
  bool gnuplot = false;
};

struct BoundInfo {
  double sigma_max = 0.0;
  double sigma_aqb_min = 0.0;
  SigmaSource source = SigmaSource::kTrace;
  RateReport report;
};

struct ConfigResult {
  ConfigRun run;
  std::vector<IterateTrace> trials;
  double initial_mean_sq_error = 0.0;
  std::vector<double> mean_sq_error;  // [k - 1] holds iteration k
  std::vector<double> mean_time_s;
  std::optional<BoundInfo> bound_info;
  std::vector<double> bound;  // r^k e0, empty unless r < 1
  double time_p10 = 0.0, time_p50 = 0.0, time_p90 = 0.0;

  bool bound_plotted() const noexcept { return !bound.empty(); }
};

/// Seed for trial `trial` of a configuration whose base seed is `base`.
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t trial) { return Rng(base).split(trial).key(); }

inline bool is_quantile_variant(Variant v) { return v == Variant::kQRK || v == Variant::kSQRK; }

namespace detail {

inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace detail

/// Mean curves, percentiles and the bound overlay from finished trials.
inline void summarize(const CorruptedSystem& sys, const ExperimentOptions& opts, std::optional<double> known_sigma_max,
                      ConfigResult& res) {
  const std::size_t trials = res.trials.size();
  const std::size_t iters = res.run.config.max_iters;
  res.mean_sq_error.assign(iters, 0.0);
  res.mean_time_s.assign(iters, 0.0);
  res.initial_mean_sq_error = 0.0;
  std::vector<double> totals;
  for (const auto& tr : res.trials) {
    res.initial_mean_sq_error += tr.initial_sq_error;
    for (std::size_t k = 0; k < iters; ++k) {
      res.mean_sq_error[k] += tr.rows[k].sq_error;
      res.mean_time_s[k] += tr.rows[k].elapsed_seconds;
    }
    totals.push_back(tr.rows.empty() ? 0.0 : tr.rows.back().elapsed_seconds);
  }
  const double inv = 1.0 / static_cast<double>(trials);
  res.initial_mean_sq_error *= inv;
  for (std::size_t k = 0; k < iters; ++k) {
    res.mean_sq_error[k] *= inv;
    res.mean_time_s[k] *= inv;
  }
  res.time_p10 = detail::percentile(totals, 0.1);
  res.time_p50 = detail::percentile(totals, 0.5);
  res.time_p90 = detail::percentile(totals, 0.9);

  const SolverConfig& cfg = res.run.config;
  if (!opts.bound_overlay || !is_quantile_variant(cfg.variant) || iters == 0) return;

  BoundInfo info;
  info.source = opts.sigma_source;
  info.sigma_max = known_sigma_max ? *known_sigma_max : sigma_max(sys.a());
  if (opts.sigma_source == SigmaSource::kTrace) {
    info.sigma_aqb_min = estimate_sigma_from_trace(res.trials);
  } else {
    if (!(cfg.effective_alpha() * cfg.q > sys.beta())) {
      info.sigma_aqb_min = 0.0;
    } else {
      Rng rng = Rng(cfg.seed).split(0x5167);
      info.sigma_aqb_min =
          estimate_sigma_aqb_min(sys.a(), cfg.effective_alpha(), cfg.q, sys.beta(), opts.sigma_samples, rng);
    }
  }
  info.report = rate_r({sys.rows(), cfg.effective_alpha(), cfg.q, sys.beta(), info.sigma_max, info.sigma_aqb_min});
  res.bound_info = info;
  if (info.report.is_convergent && info.report.r < 1.0) {
    res.bound.resize(iters);
    double factor = 1.0;
    for (std::size_t k = 0; k < iters; ++k) {
      factor *= info.report.r;
      res.bound[k] = factor * res.initial_mean_sq_error;
    }
  }
}

/// Runs opts.trials independent solves of one configuration. Trials run
/// concurrently; trial t uses seed trial_seed(config.seed, t).
inline ConfigResult run_config(const CorruptedSystem& sys, const ConfigRun& run, const ExperimentOptions& opts,
                               std::optional<double> known_sigma_max = std::nullopt) {
  if (opts.trials < 1) throw InvalidArgument("need at least one trial");
  ConfigResult res;
  res.run = run;
  SolverConfig base = run.config;
  if (opts.bound_overlay && opts.sigma_source == SigmaSource::kTrace && is_quantile_variant(base.variant))
    base.record_sigma_trace = true;
  base.validate(sys.rows());

  res.trials.resize(opts.trials);
  parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
    SolverConfig cfg = base;
    cfg.seed = trial_seed(base.seed, t);
    res.trials[t] = solve(sys, cfg).trace;
  });
  summarize(sys, opts, known_sigma_max, res);
  return res;
}

// ---------------------------------------------------------------------------
// Writers

inline std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
  return out;
}

inline void write_trace_csv(std::ostream& out, const ConfigResult& res) {
  out << "trial,iter,time_s,sq_error,gamma,accepted,accepted_corrupt,selected_row,selected_corrupt,event\n";
  const bool quantile = res.run.config.variant != Variant::kRK;
  for (std::size_t t = 0; t < res.trials.size(); ++t) {
    for (const auto& row : res.trials[t].rows) {
      out << t << ',' << row.iter << ',' << csv_number(row.elapsed_seconds) << ',' << csv_number(row.sq_error) << ','
          << csv_number(row.gamma) << ',';
      if (quantile) out << row.accepted_count << ',' << row.accepted_corrupted_count;
      else out << ',';
      out << ',' << row.selected_row << ',' << csv_bool(row.selected_corrupted) << ',' << to_string(row.event)
          << '\n';
    }
  }
}

inline void write_mean_csv(std::ostream& out, const ConfigResult& res) {
  out << "iter,mean_sq_error,bound_or_empty,time_s\n";
  for (std::size_t k = 0; k < res.mean_sq_error.size(); ++k) {
    out << k + 1 << ',' << csv_number(res.mean_sq_error[k]) << ','
        << (res.bound_plotted() ? csv_number(res.bound[k]) : std::string()) << ',' << csv_number(res.mean_time_s[k])
        << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<ConfigResult>& results) {
  out << "label,variant,q,alpha,lambda,trials,iters,initial_mean_sq_error,final_mean_sq_error,sigma_max,"
         "sigma_source,sigma_aqb_min,r_G,r_C_tilde,r,cond_sampling,cond_quantile,cond_rate,cond_rate_equiv,"
         "is_convergent,bound_plotted\n";
  for (const auto& res : results) {
    const auto& cfg = res.run.config;
    const std::string lambda = cfg.variant == Variant::kSSQRK ? std::to_string(cfg.lambda) : "";
    out << res.run.label << ',' << sqrk::to_string(cfg.variant) << ',' << csv_number(cfg.q) << ','
        << csv_number(cfg.effective_alpha()) << ',' << lambda << ',' << res.trials.size() << ',' << cfg.max_iters
        << ',' << csv_number(res.initial_mean_sq_error) << ','
        << (res.mean_sq_error.empty() ? csv_number(res.initial_mean_sq_error) : csv_number(res.mean_sq_error.back()))
        << ',';
    if (res.bound_info) {
      const auto& b = *res.bound_info;
      const auto& r = b.report;
      out << csv_number(b.sigma_max) << ',' << to_string(b.source) << ',' << csv_number(b.sigma_aqb_min) << ','
          << csv_number(r.r_G) << ',' << csv_number(r.r_C_tilde) << ',' << csv_number(r.r) << ','
          << csv_bool(r.cond_sampling) << ',' << csv_bool(r.cond_quantile) << ',' << csv_bool(r.cond_rate) << ','
          << csv_bool(r.cond_rate_equiv) << ',' << csv_bool(r.is_convergent) << ',';
    } else {
      out << ",,,,,,,,,,,";
    }
    out << csv_bool(res.bound_plotted()) << '\n';
  }
}

inline void write_timing_csv(std::ostream& out, const std::vector<ConfigResult>& results) {
  out << "label,percentile,time_s\n";
  for (const auto& res : results) {
    out << res.run.label << ",10," << csv_number(res.time_p10) << '\n';
    out << res.run.label << ",50," << csv_number(res.time_p50) << '\n';
    out << res.run.label << ",90," << csv_number(res.time_p90) << '\n';
  }
}

inline void write_config_files(const std::filesystem::path& dir, const ConfigResult& res) {
  const std::string name = sanitize_label(res.run.label);
  {
    auto out = open_output(dir / ("trace_" + name + ".csv"));
    write_trace_csv(out, res);
  }
  auto out = open_output(dir / ("mean_" + name + ".csv"));
  write_mean_csv(out, res);
}

/// Two SVG views of a group of configurations: error against wall clock
/// (per-trial cloud plus mean) and against iteration (means plus bounds).
inline void write_plots(const std::filesystem::path& dir, const std::string& suffix, const std::string& title,
                        const std::vector<const ConfigResult*>& group, bool gnuplot) {
  std::vector<Series> time_series, iter_series;
  for (std::size_t g = 0; g < group.size(); ++g) {
    const ConfigResult& res = *group[g];
    const std::string& color = palette()[g % palette().size()];
    const double cloud_opacity = std::max(0.08, 0.6 / static_cast<double>(std::max<std::size_t>(1, res.trials.size())));
    for (const auto& tr : res.trials) {
      Series s;
      s.color = color;
      s.opacity = cloud_opacity;
      s.stroke_width = 1.0;
      for (const auto& row : tr.rows) {
        s.x.push_back(row.elapsed_seconds);
        s.y.push_back(row.sq_error);
      }
      time_series.push_back(std::move(s));
    }
    Series mean_t{res.mean_time_s, res.mean_sq_error, color, 1.0, 2.0, false, res.run.label};
    time_series.push_back(mean_t);

    Series mean_k;
    mean_k.color = color;
    mean_k.stroke_width = 2.0;
    mean_k.label = res.run.label;
    for (std::size_t k = 0; k < res.mean_sq_error.size(); ++k) {
      mean_k.x.push_back(static_cast<double>(k + 1));
      mean_k.y.push_back(res.mean_sq_error[k]);
    }
    iter_series.push_back(mean_k);
    if (res.bound_plotted()) {
      Series bound = mean_k;
      bound.y = res.bound;
      bound.dashed = true;
      bound.label = "bound " + res.run.label;
      iter_series.push_back(std::move(bound));
    }
  }
  write_text_file(dir / ("error_vs_time" + suffix + ".svg"),
                  render_line_plot({title, "wall clock (s)", "squared error", true}, time_series));
  write_text_file(dir / ("error_vs_iter" + suffix + ".svg"),
                  render_line_plot({title, "iteration k", "squared error", true}, iter_series));

  if (!gnuplot) return;
  std::ostringstream time_gp, iter_gp;
  for (auto* gp : {&time_gp, &iter_gp}) {
    *gp << "set datafile separator ','\nset logscale y\nset key top right\nset title '" << title << "'\n";
  }
  time_gp << "set terminal svg size 760,500\nset output 'error_vs_time" << suffix << ".gnuplot.svg'\n"
          << "set xlabel 'wall clock (s)'\nset ylabel 'squared error'\nplot ";
  iter_gp << "set terminal svg size 760,500\nset output 'error_vs_iter" << suffix << ".gnuplot.svg'\n"
          << "set xlabel 'iteration k'\nset ylabel 'squared error'\nplot ";
  for (std::size_t g = 0; g < group.size(); ++g) {
    const std::string name = sanitize_label(group[g]->run.label);
    const std::string sep = g ? ", " : "";
    time_gp << sep << "'trace_" << name << ".csv' every ::1 using 3:4 with dots notitle, 'mean_" << name
            << ".csv' every ::1 using 4:2 with lines lw 2 title '" << group[g]->run.label << "'";
    iter_gp << sep << "'mean_" << name << ".csv' every ::1 using 1:2 with lines lw 2 title '" << group[g]->run.label
            << "'";
    if (group[g]->bound_plotted())
      iter_gp << ", 'mean_" << name << ".csv' every ::1 using 1:3 with lines dt 2 title 'bound "
              << group[g]->run.label << "'";
  }
  time_gp << '\n';
  iter_gp << '\n';
  write_text_file(dir / ("error_vs_time" + suffix + ".gp"), time_gp.str());
  write_text_file(dir / ("error_vs_iter" + suffix + ".gp"), iter_gp.str());
}

struct PlotGroup {
  std::string suffix;
  std::string title;
  std::vector<std::size_t> members;  // indices into the run list
};

/// Runs every configuration, writing each one's CSVs as soon as it
/// finishes. If a later configuration fails, the summary of the finished
/// ones is still written before the error propagates.
inline std::vector<ConfigResult> run_experiment(const CorruptedSystem& sys, const std::vector<ConfigRun>& runs,
                                                const ExperimentOptions& opts, const std::filesystem::path& dir,
                                                const std::vector<PlotGroup>& groups) {
  std::filesystem::create_directories(dir);
  std::optional<double> smax;
  if (opts.bound_overlay) smax = sigma_max(sys.a());

  std::vector<ConfigResult> results;
  auto flush_summary = [&] {
    auto summary = open_output(dir / "summary.csv");
    write_summary_csv(summary, results);
    auto timing = open_output(dir / "timing.csv");
    write_timing_csv(timing, results);
  };
  try {
    for (const auto& run : runs) {
      results.push_back(run_config(sys, run, opts, smax));
      write_config_files(dir, results.back());
    }
  } catch (...) {
    flush_summary();
    throw;
  }
  flush_summary();
  for (const auto& group : groups) {
    std::vector<const ConfigResult*> members;
    for (std::size_t i : group.members) members.push_back(&results.at(i));
    write_plots(dir, group.suffix, group.title, members, opts.gnuplot);
  }
  return results;
}

}  // namespace sqrk::harness
