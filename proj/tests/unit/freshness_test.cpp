#include "flsched/freshness.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

namespace flsched {
namespace {

std::vector<std::size_t> none() { return {}; }

TEST(AouStep, NonSelectedGrowsByXSquared) {
  AouState state(1, Growth::constant_of(2.0));
  state = aou_step(state, none(), 0);
  ASSERT_DOUBLE_EQ(state.ages()[0], 5.0);
  state = aou_step(state, none(), 1);
  EXPECT_DOUBLE_EQ(state.ages()[0], 9.0);
}

TEST(AouStep, SelectedResetsToZero) {
  AouState state(1, Growth::constant_of(4.0));
  state = aou_step(state, none(), 0);
  ASSERT_DOUBLE_EQ(state.ages()[0], 17.0);
  const std::vector<std::size_t> chosen{0};
  state = aou_step(state, chosen, 1);
  EXPECT_DOUBLE_EQ(state.ages()[0], 0.0);
  EXPECT_EQ(state.last_selected()[0], 1);
}

TEST(AouStep, ConstantOneRecoversLinearAge) {
  AouState state(1, Growth::constant_of(1.0));
  for (std::size_t t = 0; t < 3; ++t) state = aou_step(state, none(), t);
  EXPECT_DOUBLE_EQ(state.ages()[0], 4.0);
}

TEST(AouStep, StalenessGrowthSumsSquares) {
  // 1 + 1^2 + 2^2 + 3^2
  AouState state(1, Growth::staleness());
  for (std::size_t t = 0; t < 3; ++t) state = aou_step(state, none(), t);
  EXPECT_DOUBLE_EQ(state.ages()[0], 15.0);
}

TEST(AouStep, StalenessRestartsAfterSelection) {
  AouState state(1, Growth::staleness());
  const std::vector<std::size_t> chosen{0};
  state = aou_step(state, none(), 0);    // 2
  state = aou_step(state, chosen, 1);    // 0
  state = aou_step(state, none(), 2);    // 0 + 1
  state = aou_step(state, none(), 3);    // 1 + 4
  EXPECT_DOUBLE_EQ(state.ages()[0], 5.0);
}

TEST(AouStep, RoundGrowthUsesGlobalRound) {
  AouState state(1, Growth::round());
  state = aou_step(state, none(), 0);  // 1 + 1
  state = aou_step(state, none(), 1);  // + 4
  state = aou_step(state, none(), 2);  // + 9
  EXPECT_DOUBLE_EQ(state.ages()[0], 15.0);
}

TEST(AouStep, RejectsOutOfRangeClient) {
  AouState state(3, Growth::staleness());
  const std::vector<std::size_t> bad{3};
  EXPECT_THROW(aou_step(state, bad, 0), std::invalid_argument);
}

TEST(AouStep, IsPure) {
  const AouState state(2, Growth::staleness());
  const std::vector<std::size_t> chosen{1};
  const auto next = aou_step(state, chosen, 0);
  EXPECT_EQ(aou_snapshot(state), (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(aou_snapshot(next), (std::vector<double>{2.0, 0.0}));
}

TEST(AouSnapshot, FreshStateIsAllOnes) {
  EXPECT_EQ(aou_snapshot(AouState(3, Growth::staleness())), (std::vector<double>{1, 1, 1}));
}

TEST(AouSnapshot, CopyIsIndependent) {
  AouState state(3, Growth::staleness());
  const std::vector<std::size_t> chosen{1};
  state = aou_step(state, chosen, 0);
  auto snap = aou_snapshot(state);
  EXPECT_EQ(snap[1], 0.0);
  snap[1] = 42.0;
  EXPECT_EQ(aou_snapshot(state), aou_snapshot(state));
  EXPECT_EQ(state.ages()[1], 0.0);
}

TEST(Growth, ParsesAndPrints) {
  EXPECT_EQ(Growth::parse("staleness"), Growth::staleness());
  EXPECT_EQ(Growth::parse("round"), Growth::round());
  EXPECT_EQ(Growth::parse("constant"), Growth::constant_of(1.0));
  EXPECT_EQ(Growth::parse("constant:2.5"), Growth::constant_of(2.5));
  EXPECT_EQ(Growth::parse(Growth::constant_of(0.1).to_string()), Growth::constant_of(0.1));
  EXPECT_THROW(Growth::parse("cubic"), std::invalid_argument);
  EXPECT_THROW(Growth::parse("constant:-1"), std::invalid_argument);
}

// Selecting in every round keeps the age pinned at zero.
TEST(AouProperties, ResetIsIdempotent) {
  AouState state(2, Growth::staleness());
  const std::vector<std::size_t> chosen{0};
  for (std::size_t t = 0; t < 4; ++t) {
    state = aou_step(state, chosen, t);
    EXPECT_EQ(state.ages()[0], 0.0);
  }
}

TEST(AouProperties, StrictlyIncreasingWhileUnselected) {
  for (const auto growth : {Growth::staleness(), Growth::round(), Growth::constant_of(0.3)}) {
    AouState state(1, growth);
    double previous = state.ages()[0];
    for (std::size_t t = 0; t < 20; ++t) {
      state = aou_step(state, none(), t);
      EXPECT_GT(state.ages()[0], previous) << growth.to_string();
      previous = state.ages()[0];
    }
  }
}

TEST(AouProperties, PermutationEquivariant) {
  std::mt19937_64 gen(7);
  const std::size_t clients = 6;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> perm(clients);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    AouState plain(clients, Growth::staleness());
    AouState relabeled(clients, Growth::staleness());
    for (std::size_t t = 0; t < 8; ++t) {
      std::vector<std::size_t> chosen, mapped;
      for (std::size_t k = 0; k < clients; ++k) {
        if (gen() % 3 == 0) {
          chosen.push_back(k);
          mapped.push_back(perm[k]);
        }
      }
      plain = aou_step(plain, chosen, t);
      relabeled = aou_step(relabeled, mapped, t);
      for (std::size_t k = 0; k < clients; ++k) {
        ASSERT_EQ(plain.ages()[k], relabeled.ages()[perm[k]]);
      }
    }
  }
}

// Exhaustive check against the linear recurrence T <- (T + 1)(1 - S).
TEST(AouProperties, ConstantOneMatchesLinearRecurrenceExhaustively) {
  const std::size_t clients = 3;
  const std::size_t horizon = 4;
  const std::size_t subsets = 1u << clients;
  std::size_t total = 1;
  for (std::size_t t = 0; t < horizon; ++t) total *= subsets;
  for (std::size_t code = 0; code < total; ++code) {
    AouState state(clients, Growth::constant_of(1.0));
    std::vector<long> replay(clients, 1);
    std::size_t rest = code;
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::size_t mask = rest % subsets;
      rest /= subsets;
      std::vector<std::size_t> chosen;
      for (std::size_t k = 0; k < clients; ++k) {
        const long s = (mask >> k) & 1u;
        if (s) chosen.push_back(k);
        replay[k] = (replay[k] + 1) * (1 - s);
      }
      state = aou_step(state, chosen, t);
      for (std::size_t k = 0; k < clients; ++k) {
        ASSERT_EQ(state.ages()[k], static_cast<double>(replay[k]));
      }
    }
  }
}

TEST(AouStepInto, MatchesAouStepWithAndWithoutAliasing) {
  std::mt19937_64 gen(12);
  for (const auto& growth : {Growth::constant_of(2.0), Growth::staleness(), Growth::round()}) {
    AouState functional(30, growth);
    AouState separate(30, growth);
    AouState aliased(30, growth);
    for (std::size_t t = 0; t < 40; ++t) {
      std::vector<std::size_t> chosen;
      const std::size_t count = gen() % 25;  // exercises both lookup paths
      for (std::size_t i = 0; i < count; ++i) chosen.push_back(gen() % 30);
      const AouState before = separate;
      functional = aou_step(functional, chosen, t);
      aou_step_into(before, chosen, t, separate);
      aou_step_into(aliased, chosen, t, aliased);
      ASSERT_TRUE(std::equal(functional.ages().begin(), functional.ages().end(),
                             separate.ages().begin()));
      ASSERT_TRUE(std::equal(functional.ages().begin(), functional.ages().end(),
                             aliased.ages().begin()));
      ASSERT_TRUE(std::equal(functional.last_selected().begin(), functional.last_selected().end(),
                             aliased.last_selected().begin()));
    }
  }
}

TEST(AouStepInto, FailureLeavesOutputUntouched) {
  AouState state(3, Growth::staleness());
  state = aou_step(state, std::vector<std::size_t>{1}, 4);
  AouState out(3, Growth::staleness());
  EXPECT_THROW(aou_step_into(state, std::vector<std::size_t>{0}, 4, out), std::invalid_argument);
  EXPECT_THROW(aou_step_into(state, std::vector<std::size_t>{3}, 5, out), std::invalid_argument);
  for (double a : out.ages()) EXPECT_EQ(a, 1.0);
}

}  // namespace
}  // namespace flsched
