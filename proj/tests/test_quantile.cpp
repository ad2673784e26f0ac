#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <span>
#include <vector>

#include "oracle/oracles.hpp"
#include "sqrk/quantile.hpp"
#include "sqrk/rng.hpp"

namespace {

using namespace sqrk;

std::vector<std::size_t> idx(std::span<const std::size_t> s) { return {s.begin(), s.end()}; }

// Random multiset; when `dupes` is set values come from a small pool.
std::vector<double> random_values(Rng& rng, std::size_t size, bool dupes) {
  std::vector<double> v(size);
  for (double& x : v) x = dupes ? static_cast<double>(rng.uniform_index(5)) : rng.normal();
  return v;
}

// Needs size >= 2: no q in (0, 1) has floor(q) >= 1.
double random_feasible_q(Rng& rng, std::size_t size) {
  for (;;) {
    const double q = rng.uniform01();
    if (q > 0.0 && std::floor(q * static_cast<double>(size)) >= 1.0) return q;
  }
}

TEST(QQuantile, OneToTenMedian) {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_EQ(q_quantile(v, 0.5), 5.0);
  EXPECT_EQ(q_quantile(v, 0.5), oracle::kth_smallest(v, 5));
}

TEST(QQuantile, SingletonHasNoValidRank) {
  // floor(q * 1) = 0 for every q < 1.
  std::vector<double> v{7};
  EXPECT_THROW(q_quantile(v, 0.999), QuantileIndexZeroError);
}

TEST(QQuantile, TiesUseOrderStatistic) {
  std::vector<double> v{2, 2, 2, 9};
  EXPECT_EQ(q_quantile(v, 0.5), 2.0);
  EXPECT_EQ(q_quantile(v, 0.5), oracle::kth_smallest(v, 2));
}

TEST(QQuantile, Errors) {
  std::vector<double> empty;
  EXPECT_THROW(q_quantile(empty, 0.5), EmptySampleError);
  std::vector<double> two{1, 2};
  EXPECT_THROW(q_quantile(two, 0.4), QuantileIndexZeroError);
  EXPECT_THROW(q_quantile(two, 0.0), InvalidArgument);
  EXPECT_THROW(q_quantile(two, 1.0), InvalidArgument);
}

TEST(QQuantile, MatchesSortOracle) {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t size = 2 + rng.uniform_index(300);
    const auto v = random_values(rng, size, t % 2 == 0);
    const double q = random_feasible_q(rng, size);
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(size)));
    ASSERT_EQ(q_quantile(v, q), oracle::kth_smallest(v, k)) << "size " << size << " q " << q;
  }
}

TEST(QQuantile, PermutationInvariant) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    auto v = random_values(rng, 2 + rng.uniform_index(100), t % 3 == 0);
    const double q = random_feasible_q(rng, v.size());
    const double before = q_quantile(v, q);
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(q_quantile(v, q), before);
  }
}

TEST(QQuantile, MonotoneInQ) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_values(rng, 2 + rng.uniform_index(100), t % 2 == 0);
    double q1 = random_feasible_q(rng, v.size()), q2 = random_feasible_q(rng, v.size());
    if (q1 > q2) std::swap(q1, q2);
    EXPECT_LE(q_quantile(v, q1), q_quantile(v, q2));
  }
}

TEST(QQuantile, InplaceLeavesMultisetIntact) {
  Rng rng(4);
  auto v = random_values(rng, 50, true);
  auto scratch = v;
  q_quantile_inplace(scratch, 0.3);
  std::sort(v.begin(), v.end());
  std::sort(scratch.begin(), scratch.end());
  EXPECT_EQ(v, scratch);
}

TEST(ThresholdSet, StrictAndInclusive) {
  const auto sample = IndexSet::from_sorted({3, 7, 9}, 10);
  const std::vector<double> r{0.1, 0.5, 0.9};
  EXPECT_EQ(idx(threshold_set(sample, r, 0.5, ThresholdMode::kStrict).indices()), (std::vector<std::size_t>{3}));
  EXPECT_EQ(idx(threshold_set(sample, r, 0.5, ThresholdMode::kInclusive).indices()),
            (std::vector<std::size_t>{3, 7}));
  EXPECT_EQ(idx(threshold_set(sample, r, 0.5).indices()), (std::vector<std::size_t>{3, 7}));
}

TEST(ThresholdSet, AllTiedStrictIsEmpty) {
  const auto sample = IndexSet::from_sorted({0, 1, 2}, 3);
  const std::vector<double> r{0.5, 0.5, 0.5};
  EXPECT_THROW(threshold_set(sample, r, 0.5, ThresholdMode::kStrict), EmptyAcceptedSetError);
  EXPECT_EQ(threshold_set(sample, r, 0.5, ThresholdMode::kInclusive).size(), 3U);
}

TEST(ThresholdSet, RejectsNonFiniteGamma) {
  const auto sample = IndexSet::from_sorted({0}, 1);
  const std::vector<double> r{0.5};
  EXPECT_THROW(threshold_set(sample, r, NAN), InvalidArgument);
  EXPECT_THROW(threshold_set(sample, r, INFINITY), InvalidArgument);
}

TEST(ThresholdSet, InclusiveCardinalityAtLeastRank) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const bool dupes = t % 2 == 1;
    const std::size_t m = 2 + rng.uniform_index(200);
    const auto v = random_values(rng, m, dupes);
    std::vector<double> mags(m);
    std::transform(v.begin(), v.end(), mags.begin(), [](double x) { return std::fabs(x); });
    const double q = random_feasible_q(rng, m);
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(m)));
    const auto set = threshold_set(IndexSet::full(m), mags, q_quantile(mags, q));
    EXPECT_GE(set.size(), k);
    if (!dupes && std::set<double>(mags.begin(), mags.end()).size() == m) {
      EXPECT_EQ(set.size(), k);
    }
  }
}

}  // namespace
