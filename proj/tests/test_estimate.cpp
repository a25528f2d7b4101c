#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qdtcal/estimate.hpp"
#include "qdtcal/simulate.hpp"

namespace qdtcal::est {
namespace {

ChoiceDataset simulated(const CptParams& median, double sigma, ModelId model, std::size_t n, std::uint64_t seed) {
  auto spec = sim::PopulationSpec::centered(median, sigma, model);
  spec.n_subjects = n;
  spec.seed = seed;
  return sim::simulate_choices(sim::sample_population(spec, sim::reference_pairs()), 2, seed + 1);
}

ChoiceDataset always(Option o, std::size_t n) {
  const auto pairs = sim::reference_pairs();
  std::vector<ChoiceObservation> obs;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& p : pairs) obs.push_back({sim::subject_id(i), p.id, Session::Time1, o});
  }
  return ChoiceDataset(pairs, obs);
}

IndividualFit with_params(double alpha, double lambda, double gamma, double delta) {
  IndividualFit f;
  f.params = {alpha, lambda, delta, gamma, 0.3};
  f.subject_id = "x";
  return f;
}

}  // namespace

TEST(FitAggregate, RecoversTheGeneratingMedians) {
  const auto truth = sim::reference_logit_cpt();
  const auto ds = simulated(truth, 0.05, ModelId::LogitCpt, 142, 31);
  const auto fit = fit_aggregate(ds, ModelId::LogitCpt, Session::Time1);
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.observations, 142u * 91u);
  EXPECT_EQ(fit.params.a, 0.0);
  EXPECT_NEAR(fit.params.cpt.alpha, truth.alpha, 0.1 * truth.alpha);
  EXPECT_NEAR(fit.params.cpt.lambda, truth.lambda, 0.15 * truth.lambda);
  EXPECT_NEAR(fit.params.cpt.gamma, truth.gamma, 0.15 * truth.gamma);
  EXPECT_NEAR(fit.params.cpt.delta, truth.delta, 0.2 * truth.delta);
  // Alpha and phi trade off along a ridge; phi spreads over 0.30 to 0.42 across seeds.
  EXPECT_NEAR(fit.params.cpt.phi, truth.phi, 0.5 * truth.phi);
  const QdtParams true_params{truth, 0.0, 0.05, kDefaultWealth};
  for (const auto& pair : ds.pairs()) {
    EXPECT_NEAR(prob_a(pair, ModelId::LogitCpt, fit.params), prob_a(pair, ModelId::LogitCpt, true_params), 0.06);
  }
  EXPECT_GE(fit.log_likelihood, log_likelihood(ds, ModelId::LogitCpt, true_params, Session::Time1));
  EXPECT_NEAR(fit.log_likelihood, log_likelihood(ds, ModelId::LogitCpt, fit.params, Session::Time1), 1e-9);
}

TEST(FitAggregate, QdtNestsLogitCpt) {
  const auto ds = simulated(sim::reference_qdt_cpt(), 0.1, ModelId::Qdt, 60, 32);
  const auto cpt = fit_aggregate(ds, ModelId::LogitCpt, Session::Time1);
  const auto qdt = fit_aggregate(ds, ModelId::Qdt, Session::Time1, {}, SubjectFilter::All, {}, cpt.params.cpt);
  EXPECT_GE(qdt.log_likelihood, cpt.log_likelihood - 1e-9);
  EXPECT_NEAR(qdt.log_likelihood, log_likelihood(ds, ModelId::Qdt, qdt.params, Session::Time1), 1e-9);
  EXPECT_NO_THROW(wilks_test(cpt.log_likelihood, qdt.log_likelihood));
}

TEST(FitAggregate, DegenerateDataHitTheBox) {
  const auto fit = fit_aggregate(always(Option::A, 5), ModelId::LogitCpt, Session::Time1);
  EXPECT_TRUE(fit.boundary());
  EXPECT_GT(fit.log_likelihood, -5.0 * 91 * std::log(2.0));
}

TEST(FitAggregate, MaskSelectsSubjects) {
  const auto ds = simulated(sim::reference_logit_cpt(), 0.2, ModelId::LogitCpt, 20, 33);
  std::vector<bool> mask(20, false);
  for (std::size_t i = 0; i < 8; ++i) mask[i] = true;
  const auto fit = fit_aggregate(ds, ModelId::LogitCpt, Session::Time2, mask, SubjectFilter::Majoritarian);
  EXPECT_EQ(fit.subjects, 8u);
  EXPECT_EQ(fit.observations, 8u * 91u);
  EXPECT_EQ(fit.session, Session::Time2);
  EXPECT_NEAR(fit.log_likelihood, log_likelihood(ds, ModelId::LogitCpt, fit.params, Session::Time2, mask), 1e-9);
  EXPECT_THROW(fit_aggregate(ds, ModelId::LogitCpt, Session::Time1, std::vector<bool>(3, true)), DomainError);
}

TEST(GroupMask, SelectsLabels) {
  using shift::Group;
  const std::vector<Group> labels{Group::Majoritarian, Group::Contrarian, Group::Majoritarian};
  EXPECT_EQ(group_mask(labels, SubjectFilter::Majoritarian), (std::vector<bool>{true, false, true}));
  EXPECT_EQ(group_mask(labels, SubjectFilter::Contrarian), (std::vector<bool>{false, true, false}));
  EXPECT_EQ(group_mask(labels, SubjectFilter::All), (std::vector<bool>{true, true, true}));
}

TEST(FitPriors, LognormalMaximumLikelihood) {
  const double e = std::exp(1.0);
  const auto p = fit_priors({with_params(e, e, e, e), with_params(e * e * e, e * e * e, e * e * e, e * e * e)});
  EXPECT_NEAR(p.priors.alpha.mu, 2.0, 1e-12);
  EXPECT_NEAR(p.priors.alpha.sigma, 1.0, 1e-12);
  EXPECT_NEAR(p.priors.delta.mu, 2.0, 1e-12);

  const auto flat = fit_priors({with_params(0.7, 1, 1, 1), with_params(0.7, 1, 1, 1)});
  EXPECT_NEAR(flat.priors.alpha.mu, std::log(0.7), 1e-12);
  EXPECT_EQ(flat.priors.alpha.sigma, kPriorSigmaFloor);

  const auto warned = fit_priors({with_params(1, 1, 1, 1), with_params(2, 1, 1, 1), with_params(0, 1, 1, 1)});
  EXPECT_EQ(warned.warnings.size(), 1u);
  EXPECT_THROW(fit_priors({with_params(1, 1, 1, 1)}), DomainError);
}

TEST(FitPriors, RecoversSampledParameters) {
  Rng rng(34);
  std::vector<IndividualFit> fits;
  for (int i = 0; i < 5000; ++i) fits.push_back(with_params(rng.lognormal(-0.3, 0.4), 1, 1, 1));
  const auto p = fit_priors(fits);
  EXPECT_NEAR(p.priors.alpha.mu, -0.3, 0.02);
  EXPECT_NEAR(p.priors.alpha.sigma, 0.4, 0.02);
}

TEST(Wilks, ChiSquareTwo) {
  auto r = wilks_test(-103.0, -100.0);
  EXPECT_DOUBLE_EQ(r.statistic, 6.0);
  EXPECT_NEAR(r.p_value, std::exp(-3.0), 1e-14);
  r = wilks_test(0.0, 2.995);
  EXPECT_NEAR(r.p_value, 0.0500366270865863, 1e-13);
  r = wilks_test(-50.0, -50.0);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_EQ(wilks_test(-50.0, -50.0 - 1e-8).statistic, 0.0);
  EXPECT_THROW(wilks_test(-50.0, -51.0), NumericalError);
}

TEST(ExplainedFraction, TiesCountHalf) {
  const auto ds = always(Option::A, 1);
  std::vector<double> pa(91, 0.9);
  EXPECT_DOUBLE_EQ(explained_fraction(ds, 0, Session::Time1, pa), 1.0);
  pa.assign(91, 0.5);
  EXPECT_DOUBLE_EQ(explained_fraction(ds, 0, Session::Time1, pa), 0.5);
  pa.assign(91, 0.1);
  EXPECT_DOUBLE_EQ(explained_fraction(ds, 0, Session::Time1, pa), 0.0);
  EXPECT_DOUBLE_EQ(explained_fraction(ds, 0, Session::Time2, pa), 0.0);
}

TEST(FitIndividuals, TightPriorsPullToTheMedians) {
  const auto ds = simulated(sim::reference_logit_cpt(), 0.3, ModelId::LogitCpt, 6, 35);
  const PriorSpec tight{{std::log(0.5), 1e-3}, {std::log(2.0), 1e-3}, {std::log(0.6), 1e-3}, {std::log(0.8), 1e-3}};
  const auto fits = fit_individuals(ds, ModelId::LogitCpt, Session::Time1, Anchor{}, &tight);
  ASSERT_EQ(fits.size(), 6u);
  for (const auto& f : fits) {
    EXPECT_NEAR(f.params.alpha, 0.5, 0.01);
    EXPECT_NEAR(f.params.lambda, 2.0, 0.04);
    EXPECT_NEAR(f.params.gamma, 0.6, 0.012);
    EXPECT_NEAR(f.params.delta, 0.8, 0.016);
    EXPECT_EQ(f.answered, 91u);
    EXPECT_LE(f.penalized_objective - f.log_likelihood, tight.log_density(f.params) + 1e-9);
  }
}

TEST(FitIndividuals, PenaltyNeverRaisesTheLikelihood) {
  const auto ds = simulated(sim::reference_logit_cpt(), 0.3, ModelId::LogitCpt, 12, 36);
  const auto h = fit_hierarchical(ds, ModelId::LogitCpt, Session::Time1, Anchor{});
  ASSERT_EQ(h.fits.size(), 12u);
  ASSERT_EQ(h.unpenalized.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(h.fits[i].subject_id, h.unpenalized[i].subject_id);
    // The unpenalized fit is a local maximum search, so allow a small slack.
    EXPECT_LE(h.fits[i].log_likelihood, h.unpenalized[i].log_likelihood + 1e-3);
  }
  EXPECT_GT(h.mean_explained_fraction(), 0.5);
  EXPECT_LT(h.mean_log_likelihood(), 0.0);
}

TEST(FitIndividuals, QdtUsesTheAnchor) {
  const auto ds = simulated(sim::reference_qdt_cpt(), 0.2, ModelId::Qdt, 3, 37);
  EXPECT_THROW(fit_individuals(ds, ModelId::Qdt, Session::Time1, Anchor{-1.0, 0.05}), DomainError);
  const Anchor anchor{1.47, 0.05};
  const auto fits = fit_individuals(ds, ModelId::Qdt, Session::Time1, anchor);
  for (const auto& f : fits) {
    const QdtParams q{f.params, anchor.a, anchor.eta, anchor.wealth0};
    const std::vector<bool> only = [&] {
      std::vector<bool> m(3, false);
      m[ds.subject_index(f.subject_id)] = true;
      return m;
    }();
    EXPECT_NEAR(f.log_likelihood, log_likelihood(ds, ModelId::Qdt, q, Session::Time1, only), 1e-9);
  }
}

TEST(PredictSession, ScoresTheOtherSession) {
  const auto ds = simulated(sim::reference_logit_cpt(), 0.05, ModelId::LogitCpt, 40, 38);
  const auto fit = fit_aggregate(ds, ModelId::LogitCpt, Session::Time1);
  const auto pred = predict_session(ds, ModelId::LogitCpt, per_subject_params(ds, fit));
  EXPECT_EQ(pred.session, Session::Time2);
  EXPECT_EQ(pred.subjects.size(), 40u);
  EXPECT_EQ(pred.pairs.size(), 91u);
  EXPECT_NEAR(pred.mean_log_likelihood * 40.0, log_likelihood(ds, ModelId::LogitCpt, fit.params, Session::Time2),
              1e-8);
  EXPECT_GT(pred.mean_predicted_fraction, 0.6);
  double rss = 0.0;
  for (const auto& p : pred.pairs) rss += (p.predicted_b - p.observed_b) * (p.predicted_b - p.observed_b);
  EXPECT_NEAR(pred.rss, rss, 1e-12);

  std::vector<std::optional<QdtParams>> none(40);
  EXPECT_THROW(predict_session(ds, ModelId::LogitCpt, none), InputError);
  EXPECT_THROW(predict_session(always(Option::A, 2), ModelId::LogitCpt, {fit.params, fit.params}), InputError);
}

TEST(CompareModels, MetricsAddUp) {
  const auto ds = simulated(sim::reference_qdt_cpt(), 0.1, ModelId::Qdt, 50, 39);
  const auto cpt = fit_aggregate(ds, ModelId::LogitCpt, Session::Time1);
  const auto qdt = fit_aggregate(ds, ModelId::Qdt, Session::Time1, {}, SubjectFilter::All, {}, cpt.params.cpt);
  const auto cmp = compare_models(ds, cpt, qdt);
  EXPECT_EQ(cmp.wilks.df, 2.0);
  EXPECT_NEAR(cmp.wilks.statistic, std::max(0.0, 2 * (qdt.log_likelihood - cpt.log_likelihood)), 1e-12);
  for (const auto* m : {&cmp.cpt, &cmp.qdt}) {
    double total = 0.0;
    for (double r : m->rss_by_kind) total += r;
    EXPECT_NEAR(total, m->rss_all, 1e-12);
    EXPECT_GT(m->correlation, 0.5);
    EXPECT_FALSE(m->mean_log_likelihood.has_value());
  }
  EXPECT_NEAR(cmp.qdt.log_likelihood, qdt.log_likelihood, 1e-9);
  EXPECT_THROW(compare_models(ds, qdt, cpt), DomainError);
}

}  // namespace qdtcal::est
