// sqrk: generate corrupted systems, run Kaczmarz experiments, check rate
// hypotheses.
//
// Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 I/O.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "sqrk/harness/commands.hpp"

namespace {

using namespace sqrk;
using namespace sqrk::harness;

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

const std::map<std::string, XStarPolicy> kXStar{{"zero", XStarPolicy::kZero}, {"gaussian", XStarPolicy::kGaussian}};
const std::map<std::string, CorruptionMode> kCorruption{{"constant", CorruptionMode::kConstant},
                                                        {"signed", CorruptionMode::kRandomSigned}};
const std::map<std::string, Variant> kVariant{
    {"rk", Variant::kRK}, {"qrk", Variant::kQRK}, {"sqrk", Variant::kSQRK}, {"ssqrk", Variant::kSSQRK}};
const std::map<std::string, X0Policy> kX0{{"zero", X0Policy::kZero}, {"gaussian", X0Policy::kGaussianUnit}};
const std::map<std::string, ThresholdMode> kThreshold{{"inclusive", ThresholdMode::kInclusive},
                                                      {"strict", ThresholdMode::kStrict}};
const std::map<std::string, SigmaSource> kSigma{{"trace", SigmaSource::kTrace}, {"sampled", SigmaSource::kSampled}};
const std::map<std::string, QuantileMode> kQMode{{"smallest", QuantileMode::kSmallest},
                                                 {"median", QuantileMode::kMedian},
                                                 {"second_largest", QuantileMode::kSecondLargest}};

struct SystemFlags {
  std::string path;
  bool paper_scale = false;
  CLI::Option* m_opt = nullptr;
  CLI::Option* n_opt = nullptr;
};

void add_gen_flags(CLI::App* cmd, GenSpec& spec, SystemFlags& flags, const char* seed_flag) {
  spec.m = kDeskRows;
  spec.n = kDeskCols;
  flags.m_opt = cmd->add_option("--m", spec.m, "rows")->capture_default_str();
  flags.n_opt = cmd->add_option("--n", spec.n, "columns")->capture_default_str();
  cmd->add_flag("--paper-scale", flags.paper_scale, "use m = 50000, n = 100 unless --m/--n are given");
  cmd->add_option("--beta", spec.beta, "corrupted fraction")->capture_default_str();
  cmd->add_option("--magnitude", spec.corruption_magnitude, "corruption magnitude")->capture_default_str();
  cmd->add_option("--x-star", spec.x_star_policy, "zero | gaussian")
      ->transform(CLI::CheckedTransformer(kXStar, CLI::ignore_case));
  cmd->add_option("--corruption", spec.corruption_mode, "constant | signed")
      ->transform(CLI::CheckedTransformer(kCorruption, CLI::ignore_case));
  cmd->add_option(seed_flag, spec.seed, "system seed")->capture_default_str();
}

void add_system_flags(CLI::App* cmd, GenSpec& spec, SystemFlags& flags) {
  cmd->add_option("--system", flags.path, "load a system written by `gen` instead of generating one");
  add_gen_flags(cmd, spec, flags, "--sys-seed");
}

void apply_scale(GenSpec& spec, const SystemFlags& flags) {
  if (!flags.paper_scale) return;
  if (flags.m_opt->count() == 0) spec.m = kPaperRows;
  if (flags.n_opt->count() == 0) spec.n = kPaperCols;
}

SystemSource to_source(GenSpec spec, const SystemFlags& flags) {
  apply_scale(spec, flags);
  SystemSource src;
  src.spec = spec;
  if (!flags.path.empty()) src.path = flags.path;
  return src;
}

void add_experiment_flags(CLI::App* cmd, ExperimentOptions& exp, std::size_t& iters, std::uint64_t& seed,
                          X0Policy& x0, std::string& out) {
  cmd->add_option("--trials", exp.trials, "independent trials per config")->capture_default_str();
  cmd->add_option("--iters", iters, "iterations per trial")->capture_default_str();
  cmd->add_option("--seed", seed, "solver seed")->capture_default_str();
  cmd->add_option("--x0", x0, "zero | gaussian")->transform(CLI::CheckedTransformer(kX0, CLI::ignore_case));
  cmd->add_option("--sigma-source", exp.sigma_source, "trace | sampled")
      ->transform(CLI::CheckedTransformer(kSigma, CLI::ignore_case));
  cmd->add_option("--sigma-samples", exp.sigma_samples, "subsets for the sampled estimator")->capture_default_str();
  cmd->add_option("--threads", exp.threads, "worker threads")->capture_default_str();
  cmd->add_flag("--gnuplot", exp.gnuplot, "also write gnuplot data and scripts");
  cmd->add_option("--out", out, "output directory")->envname("SQRK_OUTPUT_DIR")->capture_default_str();
}

void print_results(const std::vector<ConfigResult>& results, const std::filesystem::path& dir) {
  for (const auto& r : results) {
    std::cout << r.run.label << ": final mean sq_error " << csv_number(r.mean_sq_error.empty() ? r.initial_mean_sq_error
                                                                                             : r.mean_sq_error.back());
    if (r.bound_info) std::cout << ", r = " << csv_number(r.bound_info->report.r);
    std::cout << '\n';
  }
  std::cout << "wrote " << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile randomized Kaczmarz experiments"};
  app.set_config("--config", "", "INI file with defaults; command-line flags take precedence");
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::string out = "out";

  // gen
  GenOptions gen_opts;
  SystemFlags gen_flags;
  std::string gen_output = "system.bin", gen_csv;
  auto* gen = app.add_subcommand("gen", "generate a corrupted Gaussian system");
  add_gen_flags(gen, gen_opts.spec, gen_flags, "--seed");
  gen->add_option("-o,--output", gen_output, "binary system file")->capture_default_str();
  gen->add_option("--csv", gen_csv, "also write a CSV dump");

  // solve
  SolveOptions solve_opts;
  SystemFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "run trials of one solver over a parameter grid");
  add_system_flags(solve, solve_opts.system.spec, solve_flags);
  add_experiment_flags(solve, solve_opts.experiment, solve_opts.iters, solve_opts.seed, solve_opts.x0, out);
  solve->add_option("--variant", solve_opts.variant, "rk | qrk | sqrk | ssqrk")
      ->transform(CLI::CheckedTransformer(kVariant, CLI::ignore_case));
  solve->add_option("--alpha", solve_opts.alphas, "sampling rates")->delimiter(',')->capture_default_str();
  solve->add_option("--q", solve_opts.qs, "quantiles")->delimiter(',')->capture_default_str();
  solve->add_option("--lambda", solve_opts.lambdas, "sample sizes (ssqrk)")->delimiter(',')->capture_default_str();
  solve->add_option("--threshold", solve_opts.threshold_mode, "inclusive | strict")
      ->transform(CLI::CheckedTransformer(kThreshold, CLI::ignore_case));
  bool solve_no_bound = false;
  solve->add_flag("--no-bound", solve_no_bound, "skip the rate bound overlay");

  // vary-q
  SolveOptions vq_opts;
  vq_opts.qs = {0.5, 0.7, 0.9};
  SystemFlags vq_flags;
  auto* vary_q = app.add_subcommand("vary-q", "SQRK over an (alpha, q) grid, plots grouped per alpha");
  add_system_flags(vary_q, vq_opts.system.spec, vq_flags);
  add_experiment_flags(vary_q, vq_opts.experiment, vq_opts.iters, vq_opts.seed, vq_opts.x0, out);
  vary_q->add_option("--alpha", vq_opts.alphas, "sampling rates")->delimiter(',')->capture_default_str();
  vary_q->add_option("--q", vq_opts.qs, "quantiles")->delimiter(',')->capture_default_str();
  vary_q->add_option("--threshold", vq_opts.threshold_mode, "inclusive | strict")
      ->transform(CLI::CheckedTransformer(kThreshold, CLI::ignore_case));
  bool vq_no_bound = false;
  vary_q->add_flag("--no-bound", vq_no_bound, "skip the rate bound overlay");

  // small-sample
  SmallSampleOptions ss_opts;
  SystemFlags ss_flags;
  ss_opts.system.spec.beta = 0.02;
  auto* small = app.add_subcommand("small-sample", "SSQRK over sample sizes and quantile modes");
  add_system_flags(small, ss_opts.system.spec, ss_flags);
  add_experiment_flags(small, ss_opts.experiment, ss_opts.iters, ss_opts.seed, ss_opts.x0, out);
  small->add_option("--lambda", ss_opts.lambdas, "sample sizes")->delimiter(',')->capture_default_str();
  small->add_option("--mode", ss_opts.modes, "smallest | median | second_largest")
      ->delimiter(',')
      ->transform(CLI::CheckedTransformer(kQMode, CLI::ignore_case));
  double event_q = 0.5;
  small->add_option("--event-q", event_q, "quantile q' for E1/E2/E3 classification")->capture_default_str();

  // heatmap
  HeatmapOptions hm_opts;
  SystemFlags hm_flags;
  auto* heatmap = app.add_subcommand("heatmap", "hypothesis grids over (q, alpha) for several beta");
  add_system_flags(heatmap, hm_opts.system.spec, hm_flags);
  heatmap->add_option("--betas", hm_opts.betas, "corruption rates")->delimiter(',')->capture_default_str();
  heatmap->add_option("--q-grid", hm_opts.q_grid, "q values")->delimiter(',');
  heatmap->add_option("--alpha-grid", hm_opts.alpha_grid, "alpha values")->delimiter(',');
  heatmap->add_option("--samples", hm_opts.samples, "subsets per cell for sigma")->capture_default_str();
  heatmap->add_option("--seed", hm_opts.seed, "estimator seed")->capture_default_str();
  heatmap->add_option("--threads", hm_opts.threads, "worker threads")->capture_default_str();
  heatmap->add_option("--out", out, "output directory")->envname("SQRK_OUTPUT_DIR")->capture_default_str();

  // rate
  RateParams rate_params;
  rate_params.m = kDeskRows;
  auto* rate = app.add_subcommand("rate", "print r_G, r~_C, r and the hypothesis checks");
  rate->add_option("--m", rate_params.m, "rows")->capture_default_str();
  rate->add_option("--alpha", rate_params.alpha, "sampling rate")->capture_default_str();
  rate->add_option("--q", rate_params.q, "quantile")->capture_default_str();
  rate->add_option("--beta", rate_params.beta, "corrupted fraction")->capture_default_str();
  rate->add_option("--sigma-max", rate_params.sigma_max, "largest singular value of A")->required();
  rate->add_option("--sigma-min", rate_params.sigma_aqb_min, "smallest singular value over admissible row subsets")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      apply_scale(gen_opts.spec, gen_flags);
      gen_opts.output = gen_output;
      if (!gen_csv.empty()) gen_opts.csv = gen_csv;
      const GenReport rep = cmd_gen(gen_opts);
      std::cout << "m = " << rep.m << "\nn = " << rep.n << "\ncorrupted = " << rep.corrupted << "\nseed = " << rep.seed
                << "\nwrote " << gen_opts.output.string() << '\n';
    } else if (solve->parsed()) {
      solve_opts.system = to_source(solve_opts.system.spec, solve_flags);
      solve_opts.experiment.bound_overlay = !solve_no_bound;
      solve_opts.output_dir = out;
      print_results(cmd_solve(solve_opts), out);
    } else if (vary_q->parsed()) {
      vq_opts.system = to_source(vq_opts.system.spec, vq_flags);
      vq_opts.experiment.bound_overlay = !vq_no_bound;
      vq_opts.output_dir = out;
      print_results(cmd_vary_q(vq_opts), out);
    } else if (small->parsed()) {
      ss_opts.system = to_source(ss_opts.system.spec, ss_flags);
      ss_opts.event_q = event_q;
      ss_opts.output_dir = out;
      const auto rep = cmd_small_sample(ss_opts);
      print_results(rep.results, out);
      for (const auto& ev : rep.events) {
        if (!ev.feasible) {
          std::cout << ev.label << ": infeasible (floor(q lambda) = 0)\n";
          continue;
        }
        std::cout << ev.label << ": E1 " << csv_number(ev.e1) << ", E2 " << csv_number(ev.e2) << ", E3 "
                  << csv_number(ev.e3) << '\n';
      }
    } else if (heatmap->parsed()) {
      hm_opts.system = to_source(hm_opts.system.spec, hm_flags);
      hm_opts.output_dir = out;
      for (const auto& map : cmd_heatmap(hm_opts))
        std::cout << "beta " << short_number(map.beta) << ": " << map.satisfied_count() << " of " << map.cells.size()
                  << " cells satisfied\n";
      std::cout << "wrote " << out << '\n';
    } else if (rate->parsed()) {
      std::cout << format_rate_report(rate_params, rate_r(rate_params));
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return 0;
}
