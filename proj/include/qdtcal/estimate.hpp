#pragma once

// Maximum-likelihood calibration of logit-CPT and QDT: aggregate fits over a
// group of subjects, two-stage hierarchical individual fits, out-of-sample
// prediction of the second session and model comparison.
//
// Optimization runs in transformed coordinates: log for alpha, lambda,
// delta, gamma, phi and eta, and log(a + 1e-3) for a so that a = 0 (the
// logit-CPT member) is reachable at the lower bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qdtcal/choice_data.hpp"
#include "qdtcal/cpt.hpp"
#include "qdtcal/error.hpp"
#include "qdtcal/gmm.hpp"
#include "qdtcal/model.hpp"
#include "qdtcal/optimize.hpp"
#include "qdtcal/parallel.hpp"
#include "qdtcal/qdt.hpp"
#include "qdtcal/stats.hpp"

namespace qdtcal::est {

inline constexpr double kProbabilityFloor = 1e-300;
inline constexpr double kAttractionShift = 1e-3;
inline constexpr double kPriorSigmaFloor = 1e-3;

enum class SubjectFilter { All, Majoritarian, Contrarian };

inline std::string_view to_string(SubjectFilter f) {
  switch (f) {
    case SubjectFilter::All: return "all";
    case SubjectFilter::Majoritarian: return "majoritarian";
    case SubjectFilter::Contrarian: return "contrarian";
  }
  return "all";
}

/// Subjects carrying the requested group label; `All` selects everyone.
inline std::vector<bool> group_mask(const std::vector<shift::Group>& labels, SubjectFilter filter) {
  std::vector<bool> mask(labels.size(), true);
  if (filter == SubjectFilter::All) return mask;
  const auto want = filter == SubjectFilter::Majoritarian ? shift::Group::Majoritarian : shift::Group::Contrarian;
  for (std::size_t i = 0; i < labels.size(); ++i) mask[i] = labels[i] == want;
  return mask;
}

/// Natural-unit search box of each parameter.
struct ParamBox {
  std::array<double, 2> alpha{0.05, 2.0};
  std::array<double, 2> lambda{0.1, 10.0};
  std::array<double, 2> delta{0.1, 5.0};
  std::array<double, 2> gamma{0.1, 5.0};
  std::array<double, 2> phi{1e-3, 50.0};
  std::array<double, 2> a{0.0, 50.0};
  std::array<double, 2> eta{1e-3, 1.0};
};

struct FitConfig {
  ParamBox box;
  opt::TabuConfig tabu{.restarts = 8, .moves_per_restart = 15};
  opt::SimplexConfig simplex{.x_tolerance = 1e-7, .f_tolerance = 1e-9};
  /// Fitted coordinates closer than this to a bound (in transformed units)
  /// are reported as boundary solutions.
  double boundary_tolerance = 1e-3;
  unsigned threads = 1;

  static FitConfig individual() {
    FitConfig c;
    c.tabu.restarts = 4;
    c.tabu.moves_per_restart = 8;
    c.simplex.x_tolerance = 1e-6;
    c.simplex.f_tolerance = 1e-8;
    return c;
  }
};

inline constexpr std::array<std::string_view, 7> kParamNames{"alpha", "lambda", "delta", "gamma", "phi", "a", "eta"};

namespace detail {

inline std::vector<opt::Bound> transformed_bounds(const ParamBox& b, std::size_t dim) {
  std::vector<opt::Bound> out;
  for (const auto& r : {b.alpha, b.lambda, b.delta, b.gamma, b.phi}) out.push_back({std::log(r[0]), std::log(r[1])});
  if (dim > 5) {
    out.push_back({std::log(b.a[0] + kAttractionShift), std::log(b.a[1] + kAttractionShift)});
    out.push_back({std::log(b.eta[0]), std::log(b.eta[1])});
  }
  out.resize(dim);
  return out;
}

inline CptParams cpt_from(std::span<const double> x) {
  return {std::exp(x[0]), std::exp(x[1]), std::exp(x[2]), std::exp(x[3]), std::exp(x[4])};
}

inline QdtParams qdt_from(std::span<const double> x, double wealth0) {
  const double a = std::exp(x[5]) - kAttractionShift;
  return {cpt_from(x), a < 1e-12 ? 0.0 : a, std::exp(x[6]), wealth0};
}

inline std::vector<double> encode(const CptParams& p) {
  return {std::log(p.alpha), std::log(p.lambda), std::log(p.delta), std::log(p.gamma), std::log(p.phi)};
}

inline std::vector<double> encode(const QdtParams& p) {
  auto x = encode(p.cpt);
  x.push_back(std::log(p.a + kAttractionShift));
  x.push_back(std::log(p.eta));
  return x;
}

/// Clamps a start into the box so that it is always a feasible point.
inline std::vector<double> clamp_into(std::vector<double> x, const std::vector<opt::Bound>& bounds) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], bounds[i].lower, bounds[i].upper);
  return x;
}

inline std::vector<std::string> at_bounds(std::span<const double> x, const std::vector<opt::Bound>& bounds,
                                          double tol) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] - bounds[i].lower < tol || bounds[i].upper - x[i] < tol) out.emplace_back(kParamNames[i]);
  }
  return out;
}

inline double log_choice(double p) { return std::log(std::max(p, kProbabilityFloor)); }

}  // namespace detail

/// Probability of choosing A on a pair under a model. Logit-CPT ignores the
/// attraction parameters.
inline double prob_a(const LotteryPair& pair, ModelId model, const QdtParams& params) {
  return model == ModelId::LogitCpt ? prospect_prob(pair, params.cpt).p_a : prospect_prob(pair, params).p_a;
}

/// Log-likelihood of every recorded choice of the selected subjects in one
/// session, computed directly from the observations.
inline double log_likelihood(const ChoiceDataset& ds, ModelId model, const QdtParams& params, Session session,
                             const std::vector<bool>& mask = {}) {
  double ll = 0.0;
  for (std::size_t j = 0; j < ds.pair_count(); ++j) {
    const double pa = prob_a(ds.pairs()[j], model, params);
    for (std::size_t i = 0; i < ds.subject_count(); ++i) {
      if (!mask.empty() && !mask[i]) continue;
      const auto c = ds.choice(i, j, session);
      if (c) ll += detail::log_choice(*c == Option::A ? pa : 1.0 - pa);
    }
  }
  return ll;
}

struct AggregateFit {
  ModelId model = ModelId::LogitCpt;
  QdtParams params;  // a = 0 for logit-CPT
  double log_likelihood = 0.0;
  Session session = Session::Time1;
  SubjectFilter filter = SubjectFilter::All;
  std::size_t subjects = 0;
  std::size_t observations = 0;
  bool converged = false;
  std::size_t evaluations = 0;
  std::vector<std::string> at_bound;

  bool boundary() const { return !at_bound.empty(); }
};

/// Starting point used alongside the tabu candidates.
inline QdtParams default_start() { return {{0.8, 1.2, 0.9, 0.7, 0.2}, 0.5, 0.05, kDefaultWealth}; }

/// Maximizes the aggregate likelihood (every selected subject shares one
/// parameter vector) of one session. For QDT, `warm_start` is typically the
/// logit-CPT optimum; it is tried with a = 0 so that the QDT maximum is never
/// below the nested one.
inline AggregateFit fit_aggregate(const ChoiceDataset& ds, ModelId model, Session session,
                                  const std::vector<bool>& mask = {}, SubjectFilter filter = SubjectFilter::All,
                                  const FitConfig& cfg = {}, std::optional<CptParams> warm_start = std::nullopt,
                                  double wealth0 = kDefaultWealth) {
  if (!mask.empty() && mask.size() != ds.subject_count()) throw DomainError("fit_aggregate: mask size mismatch");
  const std::size_t m = ds.pair_count();
  std::vector<double> n_a(m), n_b(m);
  std::size_t total = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto c = ds.counts(j, session, mask.empty() ? nullptr : &mask);
    n_a[j] = static_cast<double>(c.a);
    n_b[j] = static_cast<double>(c.b);
    total += c.total();
  }
  if (total == 0) throw DomainError("fit_aggregate: no observations for this session and subject filter");
  std::size_t subjects = 0;
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    if ((mask.empty() || mask[i]) && ds.answered(i, session) > 0) ++subjects;
  }

  const std::size_t dim = free_parameter_count(model);
  const auto bounds = detail::transformed_bounds(cfg.box, dim);
  opt::Objective obj{dim,
                     [&](std::span<const double> x) {
                       const QdtParams p = dim == 5 ? QdtParams{detail::cpt_from(x), 0.0, 0.05, wealth0}
                                                    : detail::qdt_from(x, wealth0);
                       double nll = 0.0;
                       for (std::size_t j = 0; j < m; ++j) {
                         if (n_a[j] + n_b[j] == 0.0) continue;
                         const double pa = prob_a(ds.pairs()[j], model, p);
                         nll -= n_a[j] * detail::log_choice(pa) + n_b[j] * detail::log_choice(1.0 - pa);
                       }
                       return nll;
                     },
                     bounds};
  std::vector<std::vector<double>> starts;
  const auto start = default_start();
  starts.push_back(detail::clamp_into(dim == 5 ? detail::encode(start.cpt) : detail::encode(start), bounds));
  if (warm_start) {
    QdtParams w{*warm_start, 0.0, 0.05, wealth0};
    starts.push_back(detail::clamp_into(dim == 5 ? detail::encode(w.cpt) : detail::encode(w), bounds));
  }
  const auto r = opt::global_minimize(obj, cfg.tabu, cfg.simplex, starts, cfg.threads);

  AggregateFit fit;
  fit.model = model;
  fit.params = dim == 5 ? QdtParams{detail::cpt_from(r.best_point), 0.0, 0.05, wealth0}
                        : detail::qdt_from(r.best_point, wealth0);
  fit.log_likelihood = -r.best_value;
  fit.session = session;
  fit.filter = filter;
  fit.subjects = subjects;
  fit.observations = total;
  fit.converged = r.converged;
  fit.evaluations = r.evaluations;
  fit.at_bound = detail::at_bounds(r.best_point, bounds, cfg.boundary_tolerance);
  if (model == ModelId::Qdt) {
    // a = 0 is the nested model, not a boundary pathology.
    std::erase(fit.at_bound, std::string("a"));
  }
  return fit;
}

struct IndividualFit {
  std::string subject_id;
  CptParams params;
  double log_likelihood = 0.0;        // unpenalized
  double penalized_objective = 0.0;   // log-likelihood plus log prior density
  double explained_fraction = 0.0;
  std::size_t answered = 0;
  bool converged = false;
};

/// Fraction of answered pairs whose observed choice is the modal prediction;
/// a predicted tie counts one half.
inline double explained_fraction(const ChoiceDataset& ds, std::size_t subject, Session session,
                                 const std::vector<double>& prob_a_by_pair) {
  double hits = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < ds.pair_count(); ++j) {
    const auto c = ds.choice(subject, j, session);
    if (!c) continue;
    ++n;
    const double pa = prob_a_by_pair[j];
    if (pa == 0.5) {
      hits += 0.5;
    } else if ((pa > 0.5) == (*c == Option::A)) {
      hits += 1.0;
    }
  }
  return n == 0 ? 0.0 : hits / static_cast<double>(n);
}

/// Attraction parameters held at their aggregate values in individual QDT fits.
struct Anchor {
  double a = 0.0;
  double eta = 0.05;
  double wealth0 = kDefaultWealth;
};

inline Anchor anchor_of(const AggregateFit& fit) { return {fit.params.a, fit.params.eta, fit.params.wealth0}; }

/// One parameter vector per subject. With `priors` the objective adds the
/// lognormal log densities of alpha, lambda, gamma and delta (phi stays
/// unpenalized); without, it is the plain likelihood. Subjects with no
/// answers in the session are skipped. For QDT the attraction term uses the
/// anchor, so both models have five individual parameters.
inline std::vector<IndividualFit> fit_individuals(const ChoiceDataset& ds, ModelId model, Session session,
                                                  const Anchor& anchor, const PriorSpec* priors = nullptr,
                                                  const FitConfig& cfg = FitConfig::individual()) {
  if (priors) priors->validate();
  if (model == ModelId::Qdt && !(anchor.a >= 0.0 && anchor.eta > 0.0)) throw DomainError("fit_individuals: bad anchor");
  const std::size_t m = ds.pair_count();
  std::vector<double> cara_gap(m, 0.0);
  if (model == ModelId::Qdt) {
    for (std::size_t j = 0; j < m; ++j) {
      cara_gap[j] = lottery_cara(ds.pairs()[j].a, anchor.eta, anchor.wealth0) -
                    lottery_cara(ds.pairs()[j].b, anchor.eta, anchor.wealth0);
    }
  }
  const double a = model == ModelId::Qdt ? anchor.a : 0.0;
  auto probs = [&](const CptParams& p) {
    std::vector<double> out(m);
    for (std::size_t j = 0; j < m; ++j) {
      const auto& pair = ds.pairs()[j];
      out[j] = prospect_prob(cpt_utility(pair.a, p), cpt_utility(pair.b, p), p.phi, cara_gap[j], 0.0, a).p_a;
    }
    return out;
  };

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    if (ds.answered(i, session) > 0) active.push_back(i);
  }
  std::vector<IndividualFit> fits(active.size());
  const auto bounds = detail::transformed_bounds(cfg.box, 5);
  parallel_for(active.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t i = active[k];
    std::vector<std::size_t> pairs_answered;
    std::vector<bool> chose_a;
    for (std::size_t j = 0; j < m; ++j) {
      if (const auto c = ds.choice(i, j, session)) {
        pairs_answered.push_back(j);
        chose_a.push_back(*c == Option::A);
      }
    }
    auto loglik = [&](const CptParams& p) {
      double ll = 0.0;
      for (std::size_t t = 0; t < pairs_answered.size(); ++t) {
        const auto& pair = ds.pairs()[pairs_answered[t]];
        const double pa = prospect_prob(cpt_utility(pair.a, p), cpt_utility(pair.b, p), p.phi,
                                        cara_gap[pairs_answered[t]], 0.0, a)
                              .p_a;
        ll += detail::log_choice(chose_a[t] ? pa : 1.0 - pa);
      }
      return ll;
    };
    opt::Objective obj{5,
                       [&](std::span<const double> x) {
                         const auto p = detail::cpt_from(x);
                         return -(loglik(p) + (priors ? priors->log_density(p) : 0.0));
                       },
                       bounds};
    auto local = cfg;
    local.threads = 1;
    local.tabu.seed = derive_seed(cfg.tabu.seed, {i});
    std::vector<std::vector<double>> starts{detail::clamp_into(detail::encode(default_start().cpt), bounds)};
    if (priors) {
      starts.push_back(detail::clamp_into(
          detail::encode(CptParams{priors->alpha.median(), priors->lambda.median(), priors->delta.median(),
                                   priors->gamma.median(), default_start().cpt.phi}),
          bounds));
    }
    const auto r = opt::global_minimize(obj, local.tabu, local.simplex, starts, 1);
    auto& f = fits[k];
    f.subject_id = ds.subjects()[i];
    f.params = detail::cpt_from(r.best_point);
    f.log_likelihood = loglik(f.params);
    f.penalized_objective = -r.best_value;
    f.explained_fraction = explained_fraction(ds, i, session, probs(f.params));
    f.answered = pairs_answered.size();
    f.converged = r.converged;
  });
  return fits;
}

struct PriorFit {
  PriorSpec priors;
  std::vector<std::string> warnings;
};

/// Lognormal ML estimates of the population distributions of alpha, lambda,
/// gamma and delta from individual estimates. Non-positive values are
/// excluded with a warning; sigma is floored at 1e-3.
inline PriorFit fit_priors(const std::vector<IndividualFit>& fits) {
  PriorFit out;
  auto one = [&](const char* name, auto get) {
    std::vector<double> xs;
    for (const auto& f : fits) {
      const double v = get(f.params);
      if (v > 0.0 && std::isfinite(v)) {
        xs.push_back(v);
      } else {
        out.warnings.push_back(std::string(name) + ": excluded non-positive estimate of subject " + f.subject_id);
      }
    }
    if (xs.size() < 2) throw DomainError(std::string("fit_priors: fewer than two usable estimates of ") + name);
    const auto ml = stats::lognormal_ml(xs, kPriorSigmaFloor);
    return LognormalSpec{ml.mu, ml.sigma};
  };
  out.priors.alpha = one("alpha", [](const CptParams& p) { return p.alpha; });
  out.priors.lambda = one("lambda", [](const CptParams& p) { return p.lambda; });
  out.priors.gamma = one("gamma", [](const CptParams& p) { return p.gamma; });
  out.priors.delta = one("delta", [](const CptParams& p) { return p.delta; });
  return out;
}

struct HierarchicalFit {
  ModelId model = ModelId::LogitCpt;
  Session session = Session::Time1;
  Anchor anchor;
  PriorFit priors;
  std::vector<IndividualFit> unpenalized;
  std::vector<IndividualFit> fits;

  double mean_log_likelihood() const {
    double s = 0.0;
    for (const auto& f : fits) s += f.log_likelihood;
    return fits.empty() ? 0.0 : s / static_cast<double>(fits.size());
  }
  double mean_explained_fraction() const {
    double s = 0.0;
    for (const auto& f : fits) s += f.explained_fraction;
    return fits.empty() ? 0.0 : s / static_cast<double>(fits.size());
  }
};

/// Two stages: unpenalized individual fits, lognormal priors fitted to them,
/// then one penalized re-estimation per subject.
inline HierarchicalFit fit_hierarchical(const ChoiceDataset& ds, ModelId model, Session session,
                                        const Anchor& anchor, const FitConfig& cfg = FitConfig::individual()) {
  HierarchicalFit h;
  h.model = model;
  h.session = session;
  h.anchor = model == ModelId::Qdt ? anchor : Anchor{0.0, anchor.eta, anchor.wealth0};
  h.unpenalized = fit_individuals(ds, model, session, h.anchor, nullptr, cfg);
  h.priors = fit_priors(h.unpenalized);
  h.fits = fit_individuals(ds, model, session, h.anchor, &h.priors.priors, cfg);
  return h;
}

/// Per-subject parameters for every subject of the dataset, taken from an
/// aggregate fit (shared) or from individual fits (matched by id). Subjects
/// without an individual fit get std::nullopt.
inline std::vector<std::optional<QdtParams>> per_subject_params(const ChoiceDataset& ds, const AggregateFit& fit) {
  return std::vector<std::optional<QdtParams>>(ds.subject_count(), fit.params);
}

inline std::vector<std::optional<QdtParams>> per_subject_params(const ChoiceDataset& ds, const HierarchicalFit& h) {
  std::vector<std::optional<QdtParams>> out(ds.subject_count());
  for (const auto& f : h.fits) {
    out[ds.subject_index(f.subject_id)] = QdtParams{f.params, h.anchor.a, h.anchor.eta, h.anchor.wealth0};
  }
  return out;
}

struct SubjectScore {
  std::string subject_id;
  double log_likelihood = 0.0;
  double predicted_fraction = 0.0;
  std::size_t answered = 0;
};

struct PairPrediction {
  std::string pair_id;
  PairKind kind = PairKind::PureGain;
  double predicted_b = 0.5;  // mean model probability of B over scored subjects
  double observed_b = 0.5;
};

struct Prediction {
  Session session = Session::Time2;
  std::vector<SubjectScore> subjects;
  std::vector<PairPrediction> pairs;
  double mean_log_likelihood = 0.0;
  double mean_predicted_fraction = 0.0;
  double rss = 0.0;
};

/// Scores parameters (usually fitted on session 1) against the choices of
/// `session`: per-subject log-likelihood and modal-choice hit rate, per-pair
/// predicted versus observed frequency of B.
inline Prediction predict_session(const ChoiceDataset& ds, ModelId model,
                                  const std::vector<std::optional<QdtParams>>& params,
                                  Session session = Session::Time2) {
  if (!ds.has_session(session)) throw InputError("no observations for the requested session");
  if (params.size() != ds.subject_count()) throw DomainError("predict_session: one parameter slot per subject");
  const std::size_t m = ds.pair_count();
  Prediction out;
  out.session = session;
  std::vector<double> pred_sum(m, 0.0), pred_n(m, 0.0), obs_b(m, 0.0), obs_n(m, 0.0);
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    if (!params[i] || ds.answered(i, session) == 0) continue;
    std::vector<double> pa(m);
    SubjectScore score{ds.subjects()[i], 0.0, 0.0, 0};
    for (std::size_t j = 0; j < m; ++j) {
      pa[j] = prob_a(ds.pairs()[j], model, *params[i]);
      const auto c = ds.choice(i, j, session);
      if (!c) continue;
      ++score.answered;
      score.log_likelihood += detail::log_choice(*c == Option::A ? pa[j] : 1.0 - pa[j]);
      pred_sum[j] += 1.0 - pa[j];
      pred_n[j] += 1.0;
      obs_b[j] += *c == Option::B;
      obs_n[j] += 1.0;
    }
    score.predicted_fraction = explained_fraction(ds, i, session, pa);
    out.subjects.push_back(score);
  }
  if (out.subjects.empty()) throw InputError("no subject can be scored in the requested session");
  for (const auto& s : out.subjects) {
    out.mean_log_likelihood += s.log_likelihood;
    out.mean_predicted_fraction += s.predicted_fraction;
  }
  out.mean_log_likelihood /= static_cast<double>(out.subjects.size());
  out.mean_predicted_fraction /= static_cast<double>(out.subjects.size());
  for (std::size_t j = 0; j < m; ++j) {
    if (obs_n[j] == 0.0) continue;
    PairPrediction p{ds.pairs()[j].id, ds.pairs()[j].kind, pred_sum[j] / pred_n[j], obs_b[j] / obs_n[j]};
    out.rss += (p.predicted_b - p.observed_b) * (p.predicted_b - p.observed_b);
    out.pairs.push_back(p);
  }
  return out;
}

struct WilksResult {
  double statistic = 0.0;
  double df = 2.0;
  double p_value = 1.0;
};

/// Likelihood-ratio test of a nested model. A full-model log-likelihood below
/// the restricted one by more than `slack` means the optimizer failed.
inline WilksResult wilks_test(double ll_restricted, double ll_full, double df = 2.0, double slack = 1e-6) {
  if (ll_full < ll_restricted - slack) {
    throw NumericalError("wilks_test: full model log-likelihood below the nested one");
  }
  const double stat = std::max(0.0, 2.0 * (ll_full - ll_restricted));
  return {stat, df, stats::chi_square_survival(stat, df)};
}

struct ModelMetrics {
  ModelId model = ModelId::LogitCpt;
  std::array<double, 4> rss_by_kind{};  // indexed like kAllKinds
  double rss_all = 0.0;
  double correlation = 0.0;  // NaN when either side has no variance
  double log_likelihood = 0.0;
  std::optional<double> mean_log_likelihood;  // individual level
  std::optional<double> mean_explained_fraction;
  std::vector<PairPrediction> pairs;
};

struct ModelComparison {
  Session session = Session::Time1;
  ModelMetrics cpt;
  ModelMetrics qdt;
  WilksResult wilks;
};

inline ModelMetrics model_metrics(const ChoiceDataset& ds, const AggregateFit& fit, Session session,
                                  const std::vector<bool>& mask = {}) {
  ModelMetrics out;
  out.model = fit.model;
  out.log_likelihood = log_likelihood(ds, fit.model, fit.params, session, mask);
  std::vector<double> pred, obs;
  for (std::size_t j = 0; j < ds.pair_count(); ++j) {
    const auto c = ds.counts(j, session, mask.empty() ? nullptr : &mask);
    if (c.total() == 0) continue;
    const auto& pair = ds.pairs()[j];
    PairPrediction p{pair.id, pair.kind, 1.0 - prob_a(pair, fit.model, fit.params),
                     static_cast<double>(c.b) / static_cast<double>(c.total())};
    const double d2 = (p.predicted_b - p.observed_b) * (p.predicted_b - p.observed_b);
    out.rss_by_kind[static_cast<std::size_t>(pair.kind)] += d2;
    out.rss_all += d2;
    pred.push_back(p.predicted_b);
    obs.push_back(p.observed_b);
    out.pairs.push_back(p);
  }
  try {
    out.correlation = stats::pearson(pred, obs);
  } catch (const DomainError&) {
    out.correlation = std::nan("");
  }
  return out;
}

/// RSS by lottery kind, correlation and likelihoods of both models on one
/// session, plus the Wilks test of logit-CPT against QDT. Individual-level
/// means are attached when hierarchical fits are supplied.
inline ModelComparison compare_models(const ChoiceDataset& ds, const AggregateFit& cpt, const AggregateFit& qdt,
                                      const HierarchicalFit* cpt_individual = nullptr,
                                      const HierarchicalFit* qdt_individual = nullptr,
                                      const std::vector<bool>& mask = {}) {
  if (cpt.session != qdt.session) throw DomainError("compare_models: fits use different sessions");
  if (cpt.model != ModelId::LogitCpt || qdt.model != ModelId::Qdt) {
    throw DomainError("compare_models: expects a logit-cpt fit and a qdt fit");
  }
  ModelComparison out;
  out.session = cpt.session;
  out.cpt = model_metrics(ds, cpt, cpt.session, mask);
  out.qdt = model_metrics(ds, qdt, qdt.session, mask);
  out.wilks = wilks_test(cpt.log_likelihood, qdt.log_likelihood,
                         static_cast<double>(free_parameter_count(qdt.model) - free_parameter_count(cpt.model)));
  if (cpt_individual) {
    out.cpt.mean_log_likelihood = cpt_individual->mean_log_likelihood();
    out.cpt.mean_explained_fraction = cpt_individual->mean_explained_fraction();
  }
  if (qdt_individual) {
    out.qdt.mean_log_likelihood = qdt_individual->mean_log_likelihood();
    out.qdt.mean_explained_fraction = qdt_individual->mean_explained_fraction();
  }
  return out;
}

}  // namespace qdtcal::est
