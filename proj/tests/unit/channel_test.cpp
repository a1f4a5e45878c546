#include "flsched/channel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace flsched {
namespace {

ChannelConfig config_with_p(double p, std::size_t n_sub = 4) {
  ChannelConfig cfg;
  cfg.p = p;
  cfg.n_subchannels = n_sub;
  return cfg;
}

ChannelRealization single(bool reliable, double gain, double snr_threshold = 0.0) {
  return ChannelRealization({static_cast<char>(reliable)}, {gain}, 1, 1.0, 1.0, snr_threshold, 0);
}

TEST(DrawRound, CertainReliability) {
  const auto all = draw_round(config_with_p(1.0), 50, 3, 9);
  const auto none = draw_round(config_with_p(0.0), 50, 3, 9);
  for (std::size_t k = 0; k < 50; ++k) {
    EXPECT_TRUE(all.reliable(k));
    EXPECT_FALSE(none.reliable(k));
  }
}

TEST(DrawRound, ReliabilityFractionNearP) {
  const auto ch = draw_round(config_with_p(0.8, 1), 10000, 1, 2024);
  std::size_t count = 0;
  for (std::size_t k = 0; k < ch.clients(); ++k) count += ch.reliable(k);
  const double fraction = static_cast<double>(count) / 10000.0;
  EXPECT_GE(fraction, 0.78);
  EXPECT_LE(fraction, 0.82);
}

TEST(DrawRound, ShapeAndNonNegativeGains) {
  const auto ch = draw_round(config_with_p(0.5, 7), 13, 0, 1);
  EXPECT_EQ(ch.clients(), 13u);
  EXPECT_EQ(ch.subchannels(), 7u);
  EXPECT_EQ(ch.gains().size(), 13u * 7u);
  for (double g : ch.gains()) EXPECT_GE(g, 0.0);
}

TEST(DrawRound, BitIdenticalForSameInputs) {
  const auto a = draw_round(config_with_p(0.6), 20, 5, 77);
  const auto b = draw_round(config_with_p(0.6), 20, 5, 77);
  for (std::size_t k = 0; k < 20; ++k) EXPECT_EQ(a.reliable(k), b.reliable(k));
  EXPECT_TRUE(std::equal(a.gains().begin(), a.gains().end(), b.gains().begin()));
  const auto c = draw_round(config_with_p(0.6), 20, 6, 77);
  EXPECT_FALSE(std::equal(a.gains().begin(), a.gains().end(), c.gains().begin()));
}

TEST(DrawRound, ClientDrawsDoNotDependOnK) {
  const auto small = draw_round(config_with_p(0.5), 5, 2, 3);
  const auto large = draw_round(config_with_p(0.5), 50, 2, 3);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(small.reliable(k), large.reliable(k));
    for (std::size_t n = 0; n < 4; ++n) EXPECT_EQ(small.gain(k, n), large.gain(k, n));
  }
}

TEST(DrawRound, RejectsInvalidConfig) {
  EXPECT_THROW(draw_round(config_with_p(1.5), 3, 0, 1), std::invalid_argument);
  ChannelConfig cfg;
  cfg.n_subchannels = 0;
  EXPECT_THROW(draw_round(cfg, 3, 0, 1), std::invalid_argument);
  cfg = {};
  cfg.rayleigh_scale = 0.0;
  EXPECT_THROW(draw_round(cfg, 3, 0, 1), std::invalid_argument);
  EXPECT_THROW(draw_round(ChannelConfig{}, 0, 0, 1), std::invalid_argument);
}

TEST(ChannelStatistics, ReliabilityIndependentAcrossRounds) {
  const std::size_t rounds = 10000;
  std::vector<double> x(rounds);
  for (std::size_t t = 0; t < rounds; ++t) {
    x[t] = draw_round(config_with_p(0.8, 1), 1, t, 99).reliable(0) ? 1.0 : 0.0;
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= rounds;
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < rounds; ++t) {
    den += (x[t] - mean) * (x[t] - mean);
    if (t + 1 < rounds) num += (x[t] - mean) * (x[t + 1] - mean);
  }
  EXPECT_LT(std::abs(num / den), 0.05);
}

TEST(ChannelStatistics, GainMeanIsTwoSigmaSquared) {
  ChannelConfig cfg = config_with_p(0.8, 10);
  cfg.rayleigh_scale = 1.3;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    const auto ch = draw_round(cfg, 100, t, 5);
    for (double g : ch.gains()) {
      sum += g;
      ++count;
    }
  }
  ASSERT_EQ(count, 100000u);
  const double expected = 2.0 * 1.3 * 1.3;
  EXPECT_LT(std::abs(sum / count - expected) / expected, 0.05);
}

TEST(Feasible, UnreliableClientIsInfeasible) { EXPECT_FALSE(feasible(single(false, 3.0), 0, 0)); }

TEST(Feasible, ZeroGainMeetsZeroSnrBound) { EXPECT_TRUE(feasible(single(true, 0.0), 0, 0)); }

TEST(Feasible, PositiveGain) { EXPECT_TRUE(feasible(single(true, 2.5), 0, 0)); }

TEST(Feasible, SnrThresholdCuts) {
  EXPECT_FALSE(feasible(single(true, 0.5, std::log(2.0)), 0, 0));
  EXPECT_TRUE(feasible(single(true, 1.5, std::log(2.0)), 0, 0));
}

TEST(Feasible, RejectsOutOfRange) {
  EXPECT_THROW(feasible(single(true, 1.0), 1, 0), std::invalid_argument);
  EXPECT_THROW(feasible(single(true, 1.0), 0, 1), std::invalid_argument);
}

TEST(AssignSubchannels, GreedyDistinctBestGain) {
  // Client 0 prefers n=1, client 1 also prefers n=1 but gets its next best n=2.
  const ChannelRealization ch({1, 1}, {0.1, 0.9, 0.5, 0.2, 0.8, 0.6}, 3, 1.0, 1.0, 0.0, 0);
  const std::vector<std::size_t> ranked{0, 1};
  const auto slots = assign_subchannels(ch, ranked);
  ASSERT_EQ(slots.size(), 2u);
  EXPECT_EQ(slots[0], 1u);
  EXPECT_EQ(slots[1], 2u);
}

TEST(AssignSubchannels, RunsOutOfSubchannels) {
  const ChannelRealization ch({1, 1}, {0.3, 0.4}, 1, 1.0, 1.0, 0.0, 0);
  const std::vector<std::size_t> ranked{1, 0};
  const auto slots = assign_subchannels(ch, ranked);
  EXPECT_EQ(slots[0], 0u);
  EXPECT_FALSE(slots[1].has_value());
}

}  // namespace
}  // namespace flsched
