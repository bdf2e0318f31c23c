#include <cmath>

#include <gtest/gtest.h>

#include <skeptic/sources.hpp>
#include <skeptic/strategies.hpp>

#include "oracles.hpp"

using namespace skeptic;

TEST(Generate, Periodic) {
  EXPECT_EQ(generate(Periodic{"01"}, 6, 1).to_string(), "010101");
  EXPECT_EQ(generate(Periodic{"110"}, 7, 99).to_string(), "1101101");
}

TEST(Generate, DegenerateBernoulli) {
  EXPECT_EQ(generate(Bernoulli{1.0}, 4, 3).to_string(), "1111");
  EXPECT_EQ(generate(Bernoulli{0.0}, 4, 3).to_string(), "0000");
}

TEST(Generate, FixedBits) {
  const BitSource s = FixedBits{PathPrefix::from_string("0110")};
  EXPECT_EQ(generate(s, 3, 0).to_string(), "011");
  EXPECT_THROW(generate(s, 5, 0), InvalidSource);
}

TEST(Generate, SameSeedSameBits) {
  const BitSource s = MarkovChain{1, {0.1, 0.9}};
  EXPECT_EQ(generate(s, 1000, 7, 2), generate(s, 1000, 7, 2));
  EXPECT_NE(generate(s, 1000, 7, 2), generate(s, 1000, 7, 3));
  EXPECT_NE(generate(s, 1000, 7, 2), generate(s, 1000, 8, 2));
}

TEST(Generate, MarkovTransitionFrequency) {
  const BitSource s = MarkovChain{1, {0.1, 0.9}};
  const PathPrefix path = generate(s, 100000, 5);
  const MarkovCounts c = MarkovCounts::of(path, 1);
  EXPECT_NEAR(*c.transition(1), 0.9, 0.01);
  EXPECT_NEAR(*c.transition(0), 0.1, 0.01);
}

TEST(Validate, RejectsBadSources) {
  EXPECT_THROW(validate(Bernoulli{1.5}), InvalidSource);
  EXPECT_THROW(validate(MarkovChain{1, {0.5}}), InvalidSource);
  EXPECT_THROW(validate(MarkovChain{1, {0.5, -0.1}}), InvalidSource);
  EXPECT_THROW(validate(Periodic{""}), InvalidSource);
  EXPECT_THROW(validate(Periodic{"012"}), InvalidSource);
}

TEST(Stationary, ReducibleChainIsRejected) {
  // state 1 is absorbing
  EXPECT_THROW(stationary_contexts(MarkovChain{1, {0.5, 1.0}}), InvalidSource);
  EXPECT_THROW(entropy_rate(MarkovChain{1, {0.0, 1.0}}), InvalidSource);
}

TEST(Stationary, MatchesPowerIteration) {
  const MarkovChain chain{2, {0.9, 0.5, 0.5, 0.5}};
  const auto pi = stationary_contexts(chain);
  const auto ref = oracle::stationary(2, {0.9L, 0.5L, 0.5L, 0.5L});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(pi[i], static_cast<double>(ref[i]), 1e-12);
  EXPECT_NEAR(pi[0], 0.15625, 1e-12);
}

TEST(EntropyRate, Examples) {
  EXPECT_DOUBLE_EQ(entropy_rate(Bernoulli{0.5}), 1.0);
  EXPECT_DOUBLE_EQ(entropy_rate(Periodic{"01"}), 0.0);
  EXPECT_NEAR(entropy_rate(MarkovChain{1, {0.1, 0.9}}), 0.468996, 5e-7);
  const double h9 = -(0.9 * std::log2(0.9) + 0.1 * std::log2(0.1));
  EXPECT_NEAR(entropy_rate(MarkovChain{1, {0.1, 0.9}}), h9, 1e-14);
  EXPECT_THROW(entropy_rate(FixedBits{}), InvalidSource);
}

TEST(EntropyRate, StaysInUnitInterval) {
  Rng rng(31, 0);
  for (int t = 0; t < 50; ++t) {
    MarkovChain c{1 + rng.below(3), {}};
    for (std::size_t i = 0; i < (std::size_t{1} << c.k); ++i) c.one_prob.push_back(0.05 + 0.9 * rng.uniform());
    const double h = entropy_rate(c);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
  }
}

TEST(BlockDistribution, EmpiricalConvergesToStationary) {
  const std::vector<BitSource> sources{Bernoulli{0.3}, MarkovChain{1, {0.1, 0.9}}, MarkovChain{2, {0.9, 0.5, 0.5, 0.5}},
                                       Periodic{"011"}};
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const PathPrefix path = generate(sources[s], 100000, 77, s);
    for (std::size_t k = 1; k <= 3; ++k) {
      // overlapping windows
      std::vector<double> freq(std::size_t{1} << k, 0.0);
      for (std::size_t i = 0; i + k <= path.size(); ++i) {
        std::size_t v = 0;
        for (std::size_t j = 0; j < k; ++j) v = (v << 1) | path[i + j];
        freq[v] += 1.0;
      }
      for (double& f : freq) f /= static_cast<double>(path.size() - k + 1);
      EXPECT_LE(total_variation(freq, stationary_block_distribution(sources[s], k)), 0.02) << "source " << s << " k " << k;
    }
  }
}

TEST(BlockDistribution, SumsToOne) {
  for (const BitSource& s : {BitSource(Bernoulli{0.2}), BitSource(MarkovChain{2, {0.9, 0.5, 0.2, 0.5}}), BitSource(Periodic{"0010"})}) {
    for (std::size_t k = 1; k <= 5; ++k) {
      double total = 0.0;
      for (double p : stationary_block_distribution(s, k)) total += p;
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}
