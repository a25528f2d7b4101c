#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qdtcal/predictability.hpp"
#include "qdtcal/rng.hpp"

namespace qdtcal::pred {
namespace {

SuccessProfile profile(std::vector<double> ps) { return {"s", std::move(ps)}; }

SuccessProfile random_profile(Rng& rng, std::size_t n, double lo = 0.5, double hi = 1.0) {
  std::vector<double> ps(n);
  for (auto& p : ps) p = rng.uniform(lo, hi);
  return profile(std::move(ps));
}

std::size_t draw(Rng& rng, const PredictedFractionDist& d) {
  double u = rng.uniform();
  for (std::size_t k = 0; k < d.pmf.size(); ++k) {
    if (u < d.pmf[k]) return k;
    u -= d.pmf[k];
  }
  return d.pmf.size() - 1;
}

}  // namespace

TEST(SuccessProfile, MaxRule) {
  const auto s = success_profile("x", {0.5, 0.9, 0.2});
  EXPECT_EQ(s.success_probs, (std::vector<double>{0.5, 0.9, 0.8}));
  EXPECT_THROW(success_profile("x", {1.5}), DomainError);
}

TEST(PoissonBinomial, SmallCases) {
  for (const auto& d : {poisson_binomial_dft(profile({0.7})), poisson_binomial_dp(profile({0.7}))}) {
    ASSERT_EQ(d.pmf.size(), 2u);
    EXPECT_NEAR(d.pmf[0], 0.3, 1e-15);
    EXPECT_NEAR(d.pmf[1], 0.7, 1e-15);
  }
  for (const auto& d : {poisson_binomial_dft(profile({0.6, 0.8})), poisson_binomial_dp(profile({0.6, 0.8}))}) {
    EXPECT_NEAR(d.pmf[0], 0.08, 1e-15);
    EXPECT_NEAR(d.pmf[1], 0.44, 1e-15);
    EXPECT_NEAR(d.pmf[2], 0.48, 1e-15);
  }
  EXPECT_THROW(poisson_binomial_dp(profile({})), DomainError);
}

TEST(PoissonBinomial, EqualProbabilitiesGiveBinomial) {
  const auto d = poisson_binomial_dft(profile(std::vector<double>(91, 0.5)));
  const auto b = binomial_pmf(91, 0.5);
  for (std::size_t k = 0; k <= 91; ++k) EXPECT_NEAR(d.pmf[k], b.pmf[k], 1e-12);
}

TEST(PoissonBinomial, CertainSuccessIsPointMass) {
  const auto d = poisson_binomial_dp(profile(std::vector<double>(10, 1.0)));
  EXPECT_EQ(d.pmf[10], 1.0);
  EXPECT_EQ(d.mean(), 1.0);
}

TEST(PoissonBinomial, DftMatchesDpAndMoments) {
  Rng rng(21);
  for (std::size_t n : {1, 5, 91, 200}) {
    for (int rep = 0; rep < 25; ++rep) {
      const auto s = random_profile(rng, n, 0.0, 1.0);
      const auto a = poisson_binomial_dft(s), b = poisson_binomial_dp(s);
      double mean = 0.0, var = 0.0, mass = 0.0;
      for (double p : s.success_probs) {
        mean += p;
        var += p * (1 - p);
      }
      mean /= static_cast<double>(n);
      var /= static_cast<double>(n * n);
      for (std::size_t k = 0; k <= n; ++k) {
        EXPECT_NEAR(a.pmf[k], b.pmf[k], 1e-10);
        mass += a.pmf[k];
      }
      EXPECT_NEAR(mass, 1.0, 1e-9);
      EXPECT_NEAR(a.mean(), mean, 1e-9);
      EXPECT_NEAR(a.variance(), var, 1e-9);
    }
  }
}

TEST(TailProbability, EdgesAndMonotonicity) {
  Rng rng(22);
  const auto d = poisson_binomial_dp(random_profile(rng, 91, 0.5, 0.99));
  EXPECT_EQ(tail_probability(d, 1.0), 0.0);
  EXPECT_NEAR(tail_probability(d, 0.0), 1.0 - d.pmf[0], 1e-15);
  double prev = 1.0;
  for (double t = 0.0; t <= 1.0; t += 0.005) {
    const double v = tail_probability(d, t);
    EXPECT_LE(v, prev);
    prev = v;
  }
  // Strictly greater: the point k/N itself is excluded.
  const auto two = poisson_binomial_dp(profile({0.5, 0.5}));
  EXPECT_NEAR(tail_probability(two, 0.5), 0.25, 1e-15);
  EXPECT_THROW(tail_probability(d, 1.5), DomainError);
}

TEST(BinomialApprox, GridRule) {
  std::vector<double> ps(91, 70.2 / 91);
  EXPECT_DOUBLE_EQ(binomial_grid_probability(profile(ps)), 70.0 / 91);
  // Below the middle of the grid the value is clamped to ceil(N/2)/N.
  EXPECT_DOUBLE_EQ(binomial_grid_probability(profile(std::vector<double>(91, 0.3))), 46.0 / 91);
  const std::vector<double> exact(91, 60.0 / 91);
  const auto a = binomial_approx(profile(exact)), b = poisson_binomial_dp(profile(exact));
  for (std::size_t k = 0; k <= 91; ++k) EXPECT_NEAR(a.pmf[k], b.pmf[k], 1e-12);
}

TEST(BinomialApprox, CloseToExactOnSpreadProfiles) {
  // Profiles with mean 0.75 spread uniformly over [0.5, 1]; the measured
  // worst total variation over these 50 profiles is recorded as a property.
  Rng rng(23);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = random_profile(rng, 91);
    worst = std::max(worst, total_variation(binomial_approx(s), poisson_binomial_dp(s)));
  }
  RecordProperty("worst_total_variation", std::to_string(worst));
  EXPECT_LE(worst, 0.1);
}

TEST(PopulationMixture, WeightsAndMass) {
  Rng rng(24);
  const auto s = random_profile(rng, 20);
  const auto single = population_mixture({s}, false);
  const auto exact = poisson_binomial_dp(s);
  for (std::size_t k = 0; k <= 20; ++k) EXPECT_NEAR(single.pmf[k], exact.pmf[k], 1e-15);

  const auto mix = population_mixture({profile(std::vector<double>(4, 1.0)), profile(std::vector<double>(4, 0.0))},
                                      false);
  EXPECT_DOUBLE_EQ(mix.pmf[0], 0.5);
  EXPECT_DOUBLE_EQ(mix.pmf[4], 0.5);

  std::vector<SuccessProfile> many;
  for (int i = 0; i < 30; ++i) many.push_back(random_profile(rng, 91));
  for (bool approx : {false, true}) {
    double mass = 0.0;
    for (double v : population_mixture(many, approx).pmf) mass += v;
    EXPECT_NEAR(mass, 1.0, 1e-9);
  }
  EXPECT_THROW(population_mixture({profile({0.5}), profile({0.5, 0.5})}, false), DomainError);
}

TEST(KsTest, ExactMatchGivesZero) {
  const PredictedFractionDist d{{0.0, 0.25, 0.25, 0.25, 0.25}};
  const auto r = ks_test(d, {0.25, 0.5, 0.75, 1.0, 0.25, 0.5, 0.75, 1.0});
  EXPECT_NEAR(r.statistic, 0.0, 1e-15);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_EQ(r.n, 8u);
  EXPECT_THROW(ks_test(d, {0.5, 0.5}), DomainError);
}

TEST(KsTest, StatisticIsTheLargestCdfGap) {
  const PredictedFractionDist d{{0.5, 0.5}};  // N = 1
  const auto r = ks_test(d, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(r.statistic, 0.5);
}

TEST(KsTest, SamplesFromTheTheoryAreRarelyRejected) {
  Rng rng(25);
  const auto d = poisson_binomial_dp(random_profile(rng, 91, 0.6, 0.95));
  int rejected = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> obs;
    for (int i = 0; i < 142; ++i) obs.push_back(static_cast<double>(draw(rng, d)) / 91.0);
    rejected += ks_test(d, obs).p_value < 0.05;
  }
  // Discrete supports make the asymptotic p-value conservative.
  EXPECT_LE(rejected, 10);
}

TEST(CentralInterval, TailsBounded) {
  Rng rng(26);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = poisson_binomial_dp(random_profile(rng, 91));
    const auto [lo, hi] = central_interval(d, 0.05);
    double below = 0.0, above = 0.0;
    for (std::size_t k = 0; k < lo; ++k) below += d.pmf[k];
    for (std::size_t k = hi + 1; k < d.pmf.size(); ++k) above += d.pmf[k];
    EXPECT_LE(below, 0.05);
    EXPECT_LE(above, 0.05);
    EXPECT_GT(below + d.pmf[lo], 0.05);
  }
}

}  // namespace qdtcal::pred
