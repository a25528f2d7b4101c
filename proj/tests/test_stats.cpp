#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qdtcal/rng.hpp"
#include "qdtcal/stats.hpp"

namespace qdtcal::stats {

TEST(ChiSquareSurvival, AnalyticAndHighPrecisionValues) {
  EXPECT_EQ(chi_square_survival(0.0, 2), 1.0);
  EXPECT_EQ(chi_square_survival(0.0, 6), 1.0);
  // df = 2 survival is exp(-x/2).
  EXPECT_NEAR(chi_square_survival(6.0, 2), std::exp(-3.0), 1e-14);
  EXPECT_NEAR(chi_square_survival(6.0, 2), 0.0497870683678639, 1e-14);
  // Reference values from a 40-digit evaluation of Q(df/2, x/2).
  EXPECT_NEAR(chi_square_survival(5.99, 2), 0.0500366270865863, 1e-14);
  EXPECT_NEAR(chi_square_survival(10.0, 6), 0.124652019483081, 1e-13);
  EXPECT_NEAR(chi_square_survival(3.841458820694124, 1), 0.05, 1e-13);
  EXPECT_NEAR(chi_square_survival(2.5, 7), 0.927097065013474, 1e-12);
  EXPECT_NEAR(chi_square_survival(40.0, 3) / 1.065509033425586e-8, 1.0, 1e-10);
}

TEST(ChiSquareSurvival, RejectsBadDomain) {
  EXPECT_THROW(chi_square_survival(-1.0, 2), DomainError);
  EXPECT_THROW(chi_square_survival(1.0, 0.5), DomainError);
}

TEST(ChiSquareSurvival, MonotoneInXAndDf) {
  for (double df : {1.0, 2.0, 6.0}) {
    double prev = 1.0;
    for (double x = 0.1; x < 40.0; x += 0.1) {
      const double q = chi_square_survival(x, df);
      EXPECT_LE(q, prev);
      prev = q;
    }
  }
  for (double x = 0.5; x < 30.0; x += 0.5) {
    EXPECT_LT(chi_square_survival(x, 2), chi_square_survival(x, 6));
  }
}

TEST(Lognormal, LogPdfAtModeOfLog) {
  const double mu = 0.7, sigma = 0.4;
  EXPECT_NEAR(lognormal_log_pdf(std::exp(mu), mu, sigma),
              -std::log(std::exp(mu) * sigma * std::sqrt(2 * M_PI)), 1e-14);
  // 40-digit reference for x=2.5, mu=0.3, sigma=0.7.
  EXPECT_NEAR(lognormal_log_pdf(2.5, 0.3, 0.7), -1.866119898889056, 1e-13);
  EXPECT_THROW(lognormal_log_pdf(0.0, 0.0, 1.0), DomainError);
  EXPECT_THROW(lognormal_log_pdf(1.0, 0.0, 0.0), DomainError);
}

TEST(Lognormal, WiderScaleFlattensPenalty) {
  // The penalty gap between the centre and a distant point shrinks as sigma grows.
  auto gap = [](double s) { return lognormal_log_pdf(1.0, 0.0, s) - lognormal_log_pdf(5.0, 0.0, s); };
  double prev = gap(0.1);
  for (double s = 0.2; s < 5.0; s += 0.1) {
    const double g = gap(s);
    EXPECT_LT(g, prev);
    prev = g;
  }
}

TEST(Lognormal, ClosedFormMl) {
  const std::vector<double> xs{std::exp(1.0), std::exp(3.0)};
  const auto fit = lognormal_ml(xs);
  EXPECT_NEAR(fit.mu, 2.0, 1e-14);
  EXPECT_NEAR(fit.sigma, 1.0, 1e-14);
  EXPECT_THROW(lognormal_ml(std::vector<double>{1.0}), DomainError);
}

TEST(Lognormal, MlRecoversParametersFromDraws) {
  Rng rng(11);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = rng.lognormal(0.5, 0.3);
  const auto fit = lognormal_ml(xs);
  // Standard errors: sigma / sqrt(n) ~ 0.002 for mu, sigma / sqrt(2n) ~ 0.0015.
  EXPECT_NEAR(fit.mu, 0.5, 0.01);
  EXPECT_NEAR(fit.sigma, 0.3, 0.008);
}

TEST(Pearson, PerfectCorrelations) {
  const std::vector<double> xs{1, 2, 3, 5, 8};
  std::vector<double> neg;
  for (double x : xs) neg.push_back(-x);
  EXPECT_NEAR(pearson(xs, xs), 1.0, 1e-15);
  EXPECT_NEAR(pearson(xs, neg), -1.0, 1e-15);
  EXPECT_THROW(pearson(xs, std::vector<double>(5, 1.0)), DomainError);
  EXPECT_THROW(pearson(std::vector<double>{1.0}, std::vector<double>{1.0}), DomainError);
}

TEST(Rss, SumOfSquares) {
  EXPECT_DOUBLE_EQ(rss(std::vector<double>{1, 2}, std::vector<double>{0, 4}), 5.0);
}

TEST(EmpiricalCdf, StepFunction) {
  EmpiricalCdf cdf({0.3, 0.1, 0.2, 0.2});
  EXPECT_EQ(cdf(0.0), 0.0);
  EXPECT_EQ(cdf(0.1), 0.25);
  EXPECT_EQ(cdf(0.2), 0.75);
  EXPECT_EQ(cdf(0.25), 0.75);
  EXPECT_EQ(cdf(1.0), 1.0);
}

TEST(Kolmogorov, KnownQuantilesAndContinuity) {
  EXPECT_NEAR(kolmogorov_survival(1.3580986393225507), 0.05, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.2238478702170823), 0.10, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.5), 0.022217962616525127, 1e-12);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
  // The two series agree at the switch point.
  EXPECT_NEAR(kolmogorov_survival(1.18 - 1e-12), kolmogorov_survival(1.18), 1e-10);
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.05), 0.5);
}

}  // namespace qdtcal::stats
