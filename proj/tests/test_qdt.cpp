#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qdtcal/qdt.hpp"
#include "qdtcal/rng.hpp"

namespace qdtcal {
namespace {

// Aggregate QDT estimates reported for all subjects.
const QdtParams kTableQdt{{0.69, 1.02, 0.89, 0.63, 0.37}, 1.47, 0.05, 100.0};

Lottery random_lottery(Rng& rng) {
  const double p1 = std::round(rng.uniform() * 100) / 100;
  return Lottery::make(std::round(rng.uniform(-100, 100)), p1, std::round(rng.uniform(-100, 100)),
                       1 - p1);
}

QdtParams random_params(Rng& rng) {
  return {{rng.uniform(0.2, 1.5), rng.uniform(0.5, 3.0), rng.uniform(0.3, 2.0), rng.uniform(0.2, 1.5),
           rng.uniform(0.0, 2.0)},
          rng.uniform(0.0, 10.0),
          rng.uniform(0.005, 0.3),
          100.0};
}

}  // namespace

TEST(CaraUtility, AnalyticValues) {
  EXPECT_EQ(cara_utility(-100, 0.05), 0.0);
  EXPECT_EQ(cara_utility(-100, 0.7), 0.0);
  EXPECT_NEAR(cara_utility(0, 0.05), 0.993262053000915, 1e-15);
  EXPECT_NEAR(cara_utility(100, 0.05), 0.999954600070238, 1e-15);
  EXPECT_NEAR(cara_utility(0, 0.05, 50.0), 1 - std::exp(-2.5), 1e-15);
}

TEST(LotteryCara, AnalyticValues) {
  EXPECT_DOUBLE_EQ(lottery_cara(Lottery::sure(-30), 0.05), cara_utility(-30, 0.05));
  EXPECT_NEAR(lottery_cara(Lottery::make(0, 0.5, -100, 0.5), 0.05), 0.496631026500457, 1e-15);
  const auto l = Lottery::make(20, 0.3, -60, 0.7);
  EXPECT_EQ(lottery_cara(l, 0.05) - lottery_cara(l, 0.05), 0.0);
}

TEST(Attraction, Limits) {
  EXPECT_EQ(attraction(0.3, 0.9, 0.1, 0.0), 0.0);
  EXPECT_EQ(attraction(0.3, 0.4, 0.4, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(attraction(0.5, 1.0, 0.0, 1e6), 0.5);
  EXPECT_DOUBLE_EQ(attraction(0.8, 0.0, 1.0, 1e6), -0.2);
  EXPECT_THROW(attraction(1.2, 0, 0, 1), DomainError);
}

TEST(Attraction, IncreasingInCaraGap) {
  Rng rng(8);
  for (int k = 0; k < 500; ++k) {
    const double f = rng.uniform(0.01, 0.99), a = rng.uniform(0.1, 5);
    double prev = attraction(f, -1.0, 0.0, a);
    for (double gap = -0.99; gap <= 1.0; gap += 0.01) {
      const double q = attraction(f, gap, 0.0, a);
      ASSERT_GT(q, prev);
      prev = q;
    }
  }
}

TEST(ProspectProb, ReducesToLogitCptWithoutAttraction) {
  auto params = kTableQdt;
  params.a = 0.0;
  const auto pair = LotteryPair::make("t", Lottery::make(-8, 0.66, -95, 0.34),
                                      Lottery::make(-42, 0.93, -30, 0.07));
  const auto p = prospect_prob(pair, params);
  EXPECT_EQ(p.q_a, 0.0);
  EXPECT_EQ(p.p_a, logit_choice_prob(cpt_utility(pair.a, params.cpt), cpt_utility(pair.b, params.cpt),
                                     params.cpt.phi));
  EXPECT_EQ(prospect_prob(pair, params.cpt).p_a, p.p_a);
}

TEST(ProspectProb, IdenticalLotteries) {
  const auto l = Lottery::make(30, 0.4, -70, 0.6);
  const auto p = prospect_prob(LotteryPair::make("same", l, l), kTableQdt);
  EXPECT_EQ(p.f_a, 0.5);
  EXPECT_EQ(p.q_a, 0.0);
  EXPECT_EQ(p.p_a, 0.5);
}

TEST(ProspectProb, BigLossLotteryRepels) {
  const auto pair = LotteryPair::make("t", Lottery::make(-8, 0.66, -95, 0.34),
                                      Lottery::make(-42, 0.93, -30, 0.07));
  const auto p = prospect_prob(pair, kTableQdt);
  // 30-digit evaluation: f = 0.602733943610205, q = -0.123196269655608.
  EXPECT_NEAR(p.f_a, 0.602733943610205, 1e-12);
  EXPECT_NEAR(p.q_a, -0.123196269655608, 1e-12);
  EXPECT_LT(p.q_a, 0.0);
}

TEST(ProspectProb, AlternationAndBound) {
  Rng rng(9);
  for (int k = 0; k < 20000; ++k) {
    const auto pair = LotteryPair::make("r", random_lottery(rng), random_lottery(rng));
    const auto params = random_params(rng);
    const auto p = prospect_prob(pair, params);
    const auto s = prospect_prob(pair.swapped(), params);
    ASSERT_NEAR(p.q_a, -s.q_a, 1e-12);
    ASSERT_NEAR(p.p_a + p.p_b, 1.0, 1e-12);
    ASSERT_NEAR(p.p_a, p.f_a + p.q_a, 1e-12);
    ASSERT_LE(std::abs(p.q_a), std::min(p.f_a, 1 - p.f_a) + 1e-12);
    ASSERT_GE(p.p_a, 0.0);
    ASSERT_LE(p.p_a, 1.0);
  }
}

// Deepening A's loss pushes q_A down once A is the CARA-worse lottery and the
// utility factor still favours it (so min(f, 1 - f) = 1 - f grows as well).
TEST(ProspectProb, BigLossSignature) {
  const auto b = Lottery::make(-42, 0.93, -30, 0.07);
  double prev = 1.0;
  for (double loss = -45; loss >= -100; loss -= 1) {
    const auto p = prospect_prob(LotteryPair::make("t", Lottery::make(-8, 0.66, loss, 0.34), b), kTableQdt);
    EXPECT_LE(p.q_a, prev);
    prev = p.q_a;
  }
  Rng rng(10);
  int checked = 0;
  for (int k = 0; k < 20000; ++k) {
    const auto params = random_params(rng);
    const auto lb = random_lottery(rng);
    const double v1 = std::round(rng.uniform(-100, 100)), p1 = rng.uniform(0.05, 0.95);
    const double deep = rng.uniform(-100, -1), deeper = deep - rng.uniform(0, 100 + deep);
    const auto shallow = prospect_prob(LotteryPair::make("s", Lottery::make(v1, p1, deep, 1 - p1), lb), params);
    const auto worse = prospect_prob(LotteryPair::make("w", Lottery::make(v1, p1, deeper, 1 - p1), lb), params);
    if (worse.f_a < 0.5 || lottery_cara(Lottery::make(v1, p1, deep, 1 - p1), params.eta) >
                               lottery_cara(lb, params.eta)) {
      continue;
    }
    ++checked;
    EXPECT_LE(worse.q_a, shallow.q_a + 1e-15);
  }
  EXPECT_GT(checked, 500);
}

TEST(QuarterLaw, Statistic) {
  EXPECT_EQ(quarter_law_statistic(std::vector<double>(10, 0.0)), 0.0);
  EXPECT_DOUBLE_EQ(quarter_law_statistic(std::vector<double>{0.25, -0.25}), 0.25);
  EXPECT_THROW(quarter_law_statistic(std::vector<double>{}), DomainError);
}

TEST(QuarterLaw, UniformUtilityFactorSaturated) {
  Rng rng(12);
  std::vector<double> qs(1'000'000);
  for (auto& q : qs) {
    const double f = rng.uniform();
    q = attraction(f, rng.bernoulli(0.5) ? 1.0 : -1.0, 0.0, 1e6);
  }
  EXPECT_NEAR(quarter_law_statistic(qs), 0.25, 0.01);
}

}  // namespace qdtcal
