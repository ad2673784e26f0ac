#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracle/oracles.hpp"
#include "sqrk/problem.hpp"
#include "sqrk/solvers.hpp"
#include "sqrk/theory.hpp"

namespace {

using namespace sqrk;

RowNormalizedMatrix gaussian_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  GenSpec s;
  s.m = m;
  s.n = n;
  s.seed = seed;
  return gen_gaussian_system(s).a();
}

RateParams params(std::size_t m, double alpha, double q, double beta, double smax, double smin) {
  return {m, alpha, q, beta, smax, smin};
}

TEST(RateRG, Examples) {
  EXPECT_EQ(rate_rG(params(100, 1, 0.5, 0, 1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(rate_rG(params(200, 1, 0.5, 0, 1, 1)), 0.99);
  EXPECT_NEAR(rate_rG(params(200, 0.5, 0.4, 0, 1, std::sqrt(0.5 * 0.4 * 200))), 0.0, 1e-15);
}

TEST(RateRG, BelowOneForPositiveSigma) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const auto p = params(10 + rng.uniform_index(1000), 0.01 + 0.99 * rng.uniform01(), 0.01 + 0.98 * rng.uniform01(),
                          0.0, 1.0, 1e-3 + rng.uniform01());
    EXPECT_LT(rate_rG(p), 1.0);
  }
}

TEST(RateRCTilde, Examples) {
  EXPECT_EQ(rate_rC_tilde(params(50000, 1, 0.5, 1e-5, 2, 1)), 1.0);  // floor(0.5) = 0 corruptions
  const double expected = 1.0 + 0.2 * (2.0 / 70.0) + 2.0 / 4900.0;
  EXPECT_NEAR(rate_rC_tilde(params(10000, 1, 0.5, 0.01, std::sqrt(2.0), 1)), expected, 1e-14);
}

TEST(RateRCTilde, QuantileConditionViolated) {
  EXPECT_THROW(rate_rC_tilde(params(1000, 0.1, 0.95, 0.01, 1, 1)), QuantileConditionViolated);
  EXPECT_THROW(rate_rC(params(1000, 0.1, 0.95, 0.01, 1, 1), 3), QuantileConditionViolated);
}

TEST(RateRCTilde, AtLeastOne) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const double alpha = 0.05 + 0.95 * rng.uniform01(), q = 0.05 + 0.9 * rng.uniform01();
    const double beta = alpha * (1 - q) * rng.uniform01() * 0.99;
    const std::size_t m = 100 + rng.uniform_index(100000);
    EXPECT_GE(rate_rC_tilde(params(m, alpha, q, beta, 3 * rng.uniform01(), 1)), 1.0);
  }
}

TEST(RateRC, Examples) {
  const auto p = params(10000, 1, 0.5, 0.01, std::sqrt(2.0), 1);
  EXPECT_NEAR(rate_rC(p, 100), rate_rC_tilde(p), 1e-14);
  EXPECT_NEAR(rate_rC(p, 1), 1.0 + 2.0 * (2.0 / 70.0) + 2.0 / 4900.0, 1e-14);
  double prev = INFINITY;
  for (std::size_t s = 1; s <= 200; ++s) {
    const double r = rate_rC(p, s);
    EXPECT_LT(r, prev);
    prev = r;
  }
  EXPECT_THROW(rate_rC(p, 0), InvalidArgument);
}

TEST(RateR, UncorruptedLimit) {
  const auto rep = rate_r(params(1000, 0.5, 0.7, 0.0, 5, 2));
  EXPECT_EQ(rep.r, rep.r_G);
  EXPECT_EQ(rep.r_C_tilde, 1.0);
  EXPECT_TRUE(rep.cond_sampling && rep.cond_quantile && rep.cond_rate && rep.cond_rate_equiv);
  EXPECT_TRUE(rep.vacuous_corruption);
  EXPECT_TRUE(rep.is_convergent);
}

TEST(RateR, VacuousWhenFloorIsZero) {
  const auto rep = rate_r(params(50000, 1, 0.9, 1e-5, 10, 1));
  EXPECT_TRUE(rep.vacuous_corruption);
  EXPECT_EQ(rep.r, rep.r_G);
}

TEST(RateR, InfeasibleReportsFalse) {
  const auto rep = rate_r(params(1000, 0.1, 0.05, 0.01, 1, 1));  // alpha q = 0.005 < beta
  EXPECT_FALSE(rep.cond_sampling);
  EXPECT_FALSE(rep.cond_rate);
  EXPECT_FALSE(rep.is_convergent);
  const auto rep2 = rate_r(params(1000, 0.1, 0.95, 0.01, 1, 1));  // alpha (1 - q) = 0.005 < beta
  EXPECT_FALSE(rep2.cond_quantile);
  EXPECT_FALSE(rep2.is_convergent);
  EXPECT_TRUE(std::isinf(rep2.r));
}

TEST(RateR, InvalidParams) {
  EXPECT_THROW(rate_r(params(0, 1, 0.5, 0, 1, 1)), InvalidArgument);
  EXPECT_THROW(rate_r(params(10, 0, 0.5, 0, 1, 1)), InvalidArgument);
  EXPECT_THROW(rate_r(params(10, 1, 1.0, 0, 1, 1)), InvalidArgument);
  EXPECT_THROW(rate_r(params(10, 1, 0.5, 1.0, 1, 1)), InvalidArgument);
  EXPECT_THROW(rate_r(params(10, 1, 0.5, 0, -1, 1)), InvalidArgument);
}

TEST(RateR, ConditionFormsAgreeAndMatchOracle) {
  Rng rng(3);
  int feasible = 0, convergent = 0;
  for (int t = 0; t < 10000; ++t) {
    const double alpha = 0.01 + 0.99 * rng.uniform01(), q = 0.01 + 0.98 * rng.uniform01();
    const double beta = std::min(alpha * q, alpha * (1 - q)) * (0.001 + 0.998 * rng.uniform01());
    const std::size_t m = 1000 + rng.uniform_index(100000);
    if (std::floor(beta * m) < 1) continue;
    const double smax = std::sqrt(m / 50.0) * (1 + rng.uniform01());
    const double smin = smax * rng.uniform01();
    const auto rep = rate_r(params(m, alpha, q, beta, smax, smin));
    ++feasible;
    EXPECT_EQ(rep.cond_rate, rep.cond_rate_equiv);
    EXPECT_EQ(rep.cond_rate, oracle::rate_condition(static_cast<double>(m), alpha, q, beta, smax, smin));
    if (rep.is_convergent) {
      ++convergent;
      EXPECT_LT(rep.r, 1.0);
    }
    EXPECT_GE(rep.r, std::min(rep.r_G, rep.r_C_tilde) - 1e-15);
    EXPECT_LE(rep.r, std::max(rep.r_G, rep.r_C_tilde) + 1e-15);
  }
  EXPECT_GT(feasible, 1000);
  EXPECT_GT(convergent, 10);
}

TEST(EstimateSigma, FullSubsetOfIdentity) {
  const auto eye = row_normalize(DenseMatrix::identity(3));
  Rng rng(1);
  // ceil(0.999999 * 3) = 3 rows: the whole matrix.
  EXPECT_NEAR(estimate_sigma_aqb_min(eye, 1.0, 0.999999, 0.0, 5, rng), 1.0, 1e-12);
}

TEST(EstimateSigma, UndersizedSubsetIsZero) {
  const auto a = gaussian_matrix(100, 10, 2);
  Rng rng(1);
  EXPECT_EQ(estimate_sigma_aqb_min(a, 0.1, 0.5, 0.0, 5, rng), 0.0);  // 5 rows < n
}

TEST(EstimateSigma, SamplingConditionViolated) {
  const auto a = gaussian_matrix(100, 5, 2);
  Rng rng(1);
  EXPECT_THROW(estimate_sigma_aqb_min(a, 0.1, 0.1, 0.02, 5, rng), SamplingConditionViolated);
  EXPECT_THROW(estimate_sigma_aqb_min(a, 0.5, 0.5, 0.0, 0, rng), InvalidArgument);
}

TEST(EstimateSigma, RunningMinimumOverNestedSamples) {
  const auto a = gaussian_matrix(300, 8, 3);
  double prev = INFINITY;
  for (std::size_t samples : {1U, 2U, 5U, 10U, 40U}) {
    Rng rng(17);
    const double est = estimate_sigma_aqb_min(a, 0.5, 0.5, 0.01, samples, rng);
    EXPECT_LE(est, prev);
    prev = est;
  }
}

TEST(EstimateSigma, BelowEverySampledSubsetAndMatchesOracle) {
  const auto a = gaussian_matrix(200, 6, 4);
  const std::vector<double> values(a.inner().values().begin(), a.inner().values().end());
  const std::size_t size = sigma_subset_size(200, 0.6, 0.5, 0.01);
  EXPECT_EQ(size, 58U);  // ceil(0.29 * 200)
  Rng rng(5), replay(5);
  const double est = estimate_sigma_aqb_min(a, 0.6, 0.5, 0.01, 10, rng);
  double oracle_min = INFINITY;
  for (int t = 0; t < 10; ++t) {
    const auto rows = sample_without_replacement(200, size, replay);
    const double s = oracle::sigma_min_of_rows(values, 6, rows.indices());
    EXPECT_LE(est, s + 1e-9);
    oracle_min = std::min(oracle_min, s);
  }
  EXPECT_NEAR(est, oracle_min, 1e-9);
}

TEST(EstimateSigmaFromTrace, FullAcceptedSetEqualsFullMatrix) {
  // x0 = x* = 0 and no corruption: every residual is 0, so B_1 is all rows.
  GenSpec s;
  s.m = 200;
  s.n = 6;
  s.seed = 6;
  const auto sys = gen_gaussian_system(s);
  SolverConfig cfg;
  cfg.variant = Variant::kQRK;
  cfg.q = 0.5;
  cfg.max_iters = 1;
  cfg.record_sigma_trace = true;
  const auto res = solve(sys, cfg);
  ASSERT_EQ(res.trace.rows[0].accepted_count, 200U);
  const std::vector<IterateTrace> traces{res.trace};
  EXPECT_NEAR(estimate_sigma_from_trace(traces), sigma_min_rows(sys.a(), IndexSet::full(200)), 1e-12);
}

TEST(EstimateSigmaFromTrace, MinimumAcrossTrialsAndErrors) {
  IterateTrace a, b;
  a.rows.resize(3);
  b.rows.resize(2);
  a.rows[0].sigma_min = 3.0;
  a.rows[1].sigma_min = 2.0;
  b.rows[1].sigma_min = 2.5;
  const std::vector<IterateTrace> both{a, b};
  EXPECT_EQ(estimate_sigma_from_trace(both), 2.0);
  const std::vector<IterateTrace> none{IterateTrace{}};
  EXPECT_THROW(estimate_sigma_from_trace(none), InvalidArgument);
}

TEST(Heatmap, InfeasibleCellsFalse) {
  const auto a = gaussian_matrix(1000, 10, 7);
  const std::vector<double> qs{0.05, 0.5, 0.95, 1.0}, alphas{0.0, 0.1, 0.5, 1.0};
  const auto map = hypothesis_heatmap(a, 0.02, qs, alphas, 10, 1, 1);
  ASSERT_EQ(map.cells.size(), 16U);
  for (std::size_t qi = 0; qi < qs.size(); ++qi) {
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
      const auto& c = map.at(qi, ai);
      EXPECT_EQ(c.q, qs[qi]);
      EXPECT_EQ(c.alpha, alphas[ai]);
      if (c.alpha * c.q <= 0.02 || c.alpha * (1 - c.q) <= 0.02 || c.q >= 1.0 || c.alpha <= 0.0) {
        EXPECT_FALSE(c.satisfied);
      }
    }
  }
}

TEST(Heatmap, UncorruptedGridAllTrue) {
  const auto a = gaussian_matrix(500, 5, 8);
  std::vector<double> qs, alphas;
  for (int i = 1; i <= 9; ++i) qs.push_back(i / 10.0);
  for (int i = 1; i <= 10; ++i) alphas.push_back(i / 10.0);
  const auto map = hypothesis_heatmap(a, 0.0, qs, alphas, 5, 2, 1);
  for (const auto& c : map.cells) {
    EXPECT_GT(c.sigma_estimate, 0.0);
    EXPECT_TRUE(c.satisfied) << c.q << ' ' << c.alpha;
  }
}

TEST(Heatmap, SingleCellAndDeterministicAcrossThreads) {
  const auto a = gaussian_matrix(800, 8, 9);
  const std::vector<double> q1{0.5}, a1{1.0};
  EXPECT_EQ(hypothesis_heatmap(a, 1e-3, q1, a1, 5, 3, 1).cells.size(), 1U);

  const std::vector<double> qs{0.3, 0.6, 0.9}, alphas{0.4, 0.8};
  const auto one = hypothesis_heatmap(a, 1e-3, qs, alphas, 8, 4, 1);
  const auto many = hypothesis_heatmap(a, 1e-3, qs, alphas, 8, 4, 4);
  for (std::size_t i = 0; i < one.cells.size(); ++i) {
    EXPECT_EQ(one.cells[i].sigma_estimate, many.cells[i].sigma_estimate);
    EXPECT_EQ(one.cells[i].satisfied, many.cells[i].satisfied);
  }
  EXPECT_THROW(hypothesis_heatmap(a, 1e-3, std::vector<double>{}, alphas, 8, 4, 1), InvalidArgument);
}

TEST(Heatmap, CellsAgreeWithRateReport) {
  const auto a = gaussian_matrix(2000, 10, 10);
  const std::vector<double> qs{0.5, 0.7, 0.9}, alphas{0.3, 1.0};
  const auto map = hypothesis_heatmap(a, 1e-3, qs, alphas, 5, 5, 1);
  for (const auto& c : map.cells) {
    const auto rep = rate_r(params(2000, c.alpha, c.q, 1e-3, map.sigma_max, c.sigma_estimate));
    EXPECT_EQ(c.satisfied, rep.cond_sampling && rep.cond_quantile && rep.cond_rate);
  }
}

}  // namespace
