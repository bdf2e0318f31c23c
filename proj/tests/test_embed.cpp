#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include <skeptic/embed.hpp>
#include <skeptic/fbm.hpp>

#include "oracles.hpp"

using namespace skeptic;

namespace {

PricePath piecewise(const std::vector<double>& values) {
  PricePath p;
  for (std::size_t i = 0; i < values.size(); ++i) {
    p.times.push_back(static_cast<double>(i));
    p.log_price.push_back(values[i]);
  }
  return p;
}

double increment_lag1_correlation(const PricePath& p) {
  const std::size_t n = p.size() - 1;
  double s0 = 0, s1 = 0, mean = 0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) mean += d[i] = p.log_price[i + 1] - p.log_price[i];
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) s0 += (d[i] - mean) * (d[i] - mean);
  for (std::size_t i = 0; i + 1 < n; ++i) s1 += (d[i] - mean) * (d[i + 1] - mean);
  return s1 / s0;
}

}  // namespace

// --- fBM ----------------------------------------------------------------

TEST(Fbm, StartsAtZeroOnTheGrid) {
  for (double h : {0.3, 0.5, 0.75}) {
    const PricePath p = fbm_path(h, 2.0, 256, 1);
    ASSERT_EQ(p.size(), 257u);
    EXPECT_EQ(p.log_price[0], 0.0);
    EXPECT_EQ(p.times[0], 0.0);
    EXPECT_DOUBLE_EQ(p.times.back(), 2.0);
    EXPECT_NO_THROW(p.validate());
  }
}

TEST(Fbm, RejectsBadArguments) {
  EXPECT_THROW(fbm_path(0.0, 1.0, 64, 1), std::invalid_argument);
  EXPECT_THROW(fbm_path(1.0, 1.0, 64, 1), std::invalid_argument);
  EXPECT_THROW(fbm_path(0.5, 1.0, 100, 1), std::invalid_argument);
  EXPECT_THROW(fbm_path(0.5, -1.0, 64, 1), std::invalid_argument);
  EXPECT_THROW(fbm_path(0.7, 1.0, kMaxCirculantGrid * 2, 1), FbmSynthesisError);
}

TEST(Fbm, Deterministic) {
  EXPECT_EQ(fbm_path(0.7, 1.0, 1024, 5, 3).log_price, fbm_path(0.7, 1.0, 1024, 5, 3).log_price);
  EXPECT_NE(fbm_path(0.7, 1.0, 1024, 5, 3).log_price, fbm_path(0.7, 1.0, 1024, 5, 4).log_price);
}

TEST(Fbm, CirculantEigenvaluesNonNegative) {
  for (double h : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double l : circulant_eigenvalues(h, 1024)) EXPECT_GT(l, -1e-9) << "H=" << h;
}

TEST(Fbm, BrownianIncrementsUncorrelated) {
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) sum += increment_lag1_correlation(fbm_path(0.5, 1.0, 1 << 16, 9, s));
  EXPECT_LE(std::abs(sum / 100.0), 0.02);
}

TEST(Fbm, IncrementCorrelationMatchesFgn) {
  // lag-1 correlation of fractional Gaussian noise is 2^{2H-1} - 1
  for (double h : {0.3, 0.75}) {
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 40; ++s) sum += increment_lag1_correlation(fbm_path(h, 1.0, 1 << 12, 10, s));
    EXPECT_NEAR(sum / 40.0, std::pow(2.0, 2 * h - 1) - 1, 0.02) << "H=" << h;
  }
}

TEST(Fbm, SelfSimilarVarianceScaling) {
  const double h = 0.75;
  const std::size_t n = 1 << 12;
  double v_half = 0.0, v_full = 0.0;
  const int reps = 400;
  for (int s = 0; s < reps; ++s) {
    const PricePath p = fbm_path(h, 1.0, n, 11, static_cast<std::uint64_t>(s));
    v_half += p.log_price[n / 2] * p.log_price[n / 2];
    v_full += p.log_price[n] * p.log_price[n];
  }
  EXPECT_NEAR((v_full / reps) / (v_half / reps), std::pow(2.0, 2 * h), 0.1 * std::pow(2.0, 2 * h));
  EXPECT_NEAR(v_full / reps, 1.0, 0.15);
}

TEST(Fbm, DenseFallbackAgreesInDistribution) {
  const double h = 0.7;
  double v = 0.0, c = 0.0;
  const int reps = 300;
  for (int s = 0; s < reps; ++s) {
    const PricePath p = fbm_path(h, 1.0, 256, 12, static_cast<std::uint64_t>(s), true);
    v += p.log_price[256] * p.log_price[256];
    c += increment_lag1_correlation(p);
  }
  EXPECT_NEAR(v / reps, 1.0, 0.2);
  EXPECT_NEAR(c / reps, std::pow(2.0, 2 * h - 1) - 1, 0.03);
}

TEST(PriceCsv, ReadsHeaderAndLogsPrices) {
  std::istringstream in("time,price\n0,100\n0.5,110\n1,105\n");
  const PricePath p = read_price_csv(in);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p.log_price[1], std::log(110.0));
  std::istringstream bad("0,100\n0,101\n");
  EXPECT_THROW(read_price_csv(bad), std::invalid_argument);
  std::istringstream negative("0,100\n1,-3\n");
  EXPECT_THROW(read_price_csv(negative), std::invalid_argument);
}

// --- embedding -------------------------------------------------------------

TEST(Embed, MonotonePath) {
  const PricePath line{{0.0, 1.0}, {0.0, 1.0}, 0.0};
  const EmbeddedGame g = embed(line, 2);
  EXPECT_EQ(g.bits.to_string(), "1111");
  EXPECT_EQ(g.rounds(), 4u);
  EXPECT_DOUBLE_EQ(g.eta, 0.25);
  EXPECT_DOUBLE_EQ(g.rho_delta, 1.0 / (2.0 + std::expm1(0.25)));
}

TEST(Embed, UpThenDown) {
  EXPECT_EQ(embed(piecewise({0.0, 0.5, 0.25}), 2).bits.to_string(), "110");
}

TEST(Embed, ConstantPathIsEmpty) {
  EXPECT_EQ(embed(piecewise({0.3, 0.3, 0.3}), 5).rounds(), 0u);
}

TEST(Embed, AgreesWithBruteForceScan) {
  Rng rng(41, 0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v{0.0};
    for (int i = 0; i < 60; ++i) v.push_back(v.back() + 0.3 * (rng.uniform() - 0.5));
    for (int k = 2; k <= 5; ++k)
      EXPECT_EQ(embed(piecewise(v), k).bits.to_string(), oracle::brute_force_embed(v, std::ldexp(1.0, -k))) << "k=" << k;
  }
}

TEST(Embed, LevelsReconstructThePath) {
  const PricePath p = fbm_path(0.6, 1.0, 1 << 14, 42);
  for (int k = 2; k <= 8; ++k) {
    const EmbeddedGame g = embed(p, k);
    std::int64_t level = 0;
    for (std::size_t i = 0; i < g.rounds(); ++i) {
      level += g.bits[i] ? 1 : -1;
      ASSERT_EQ(level, g.grid_levels[i + 1]);
    }
    // the last traded level is within one step of the final price
    EXPECT_LE(std::abs(static_cast<double>(level) * g.eta - p.log_price.back()), g.eta);
    EXPECT_GT(g.rho_delta, 0.0);
    EXPECT_LE(g.rho_delta, 0.5);
  }
}

TEST(NestedCounts, MonotonePath) {
  std::vector<double> v;
  for (int i = 0; i <= 100; ++i) v.push_back(i / 100.0);
  const NestedCounts c = nested_counts(piecewise(v), 2, 5);
  for (const auto& l : c.levels) {
    EXPECT_EQ(l.q1, l.n);
    EXPECT_EQ(l.q[3], l.n - 1);
    EXPECT_EQ(l.q0 + l.q[0] + l.q[1] + l.q[2], 0u);
  }
}

TEST(NestedCounts, NestingIdentitiesOnFbmPaths) {
  for (double h : {0.4, 0.5, 0.6, 0.7}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const PricePath p = fbm_path(h, 1.0, 1 << 14, 43, s);
      EXPECT_TRUE(nesting_violations(nested_counts(p, 1, 10)).empty()) << "H=" << h << " seed " << s;
    }
  }
}

TEST(NestedCounts, NestingHoldsEvenWithCoarseSampling) {
  // a sample segment crossing several levels is traded level by level
  const PricePath p = fbm_path(0.5, 1.0, 64, 44);
  EXPECT_TRUE(nesting_violations(nested_counts(p, 1, 10)).empty());
}

TEST(NestedCounts, CombinatorialRelations) {
  const PricePath p = fbm_path(0.55, 1.0, 1 << 13, 45);
  const NestedCounts c = nested_counts(p, 2, 8);
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    const LevelCounts& l = c.levels[i];
    if (l.n == 0) continue;
    EXPECT_EQ(l.q1 + l.q0, l.n);
    EXPECT_LE(std::abs(static_cast<long>(l.q[1]) - static_cast<long>(l.q[2])), 1);
    EXPECT_EQ(l.q[3] + l.q[1], l.q1 - l.first);
    EXPECT_LE(std::abs(c.variation[i].net_change), c.variation[i].total_variation);
  }
}

TEST(NestedCounts, InjectedMismatchIsReported) {
  const PricePath p = fbm_path(0.5, 1.0, 1 << 12, 46);
  NestedCounts c = nested_counts(p, 3, 5);
  c.levels[1].m[3] += 1;
  EXPECT_EQ(nesting_violations(c).size(), 1u);
}

TEST(Refine, DoublesUntilSingleSteps) {
  const RefinedPath r = synthesize_refined(0.5, 1.0, 6, 64, 47, 0);
  EXPECT_EQ(embed(r.path, 6).multi_level_segments, 0u);
  EXPECT_EQ(r.n_grid, std::size_t{64} << r.doublings);
  EXPECT_GE(initial_grid(0.5, 1.0, 6), 1024u);
}

TEST(AssetGrowth, TargetsAndBrownianRates) {
  EXPECT_EQ(markov_asset_target(0.5), 0.0);
  EXPECT_NEAR(markov_asset_target(2.0 / 3.0), kl(std::pow(2.0, -0.5), 0.5), 1e-15);
  EXPECT_NEAR(block_asset_target(2.0 / 3.0), 0.5 * markov_asset_target(2.0 / 3.0), 1e-15);
  EXPECT_TRUE(std::isnan(markov_asset_target(std::nan(""))));
}

TEST(AssetGrowth, ReportFieldsAreConsistent) {
  const PricePath p = fbm_path(0.6, 1.0, 1 << 16, 48);
  const auto report = asset_growth_report(p, 3, 7, 0.6);
  ASSERT_EQ(report.size(), 5u);
  for (const auto& g : report) {
    EXPECT_GT(g.rounds, 0u);
    EXPECT_NEAR(g.rho_delta, 1.0 / (2.0 + std::expm1(grid_spacing(g.level))), 1e-15);
    EXPECT_GE(g.up_fraction, 0.0);
    EXPECT_LE(g.up_fraction, 1.0);
    EXPECT_LE(std::abs(g.variation_ratio), 1.0);
  }
  EXPECT_TRUE(std::isnan(report.back().growth_diagnostic));
  EXPECT_FALSE(std::isnan(report.front().growth_diagnostic));
}
