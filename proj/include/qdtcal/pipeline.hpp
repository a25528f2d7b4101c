#pragma once

// Batch analyses behind the command-line tool. Each stage returns its
// results together with a JSON block and the CSV tables it produced; the
// caller decides where files go.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qdtcal/choice_data.hpp"
#include "qdtcal/csv_io.hpp"
#include "qdtcal/estimate.hpp"
#include "qdtcal/gmm.hpp"
#include "qdtcal/predictability.hpp"
#include "qdtcal/report.hpp"
#include "qdtcal/shift_model.hpp"
#include "qdtcal/simulate.hpp"

namespace qdtcal::pipeline {

using report::ordered_json;

enum class Models { LogitCpt, Qdt, Both };
enum class Level { Aggregate, Individual, Both };

inline bool includes(Models m, ModelId id) {
  return m == Models::Both || (m == Models::LogitCpt) == (id == ModelId::LogitCpt);
}

struct Settings {
  unsigned threads = 1;
  std::uint64_t seed = 0;
  report::Stamp stamp;
};

/// Collects output tables and findings of a run. Warnings flag analysis
/// problems (non-convergence, estimates at a bound); notes are informational.
struct Run {
  Settings settings;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  std::vector<std::pair<std::string, report::CsvTable>> tables;

  void warn(std::string w) { warnings.push_back(std::move(w)); }
  void note(std::string n) { notes.push_back(std::move(n)); }
  void table(std::string file, report::CsvTable t) { tables.emplace_back(std::move(file), std::move(t)); }
  ordered_json header(std::string_view kind) const { return report::header(settings.stamp, kind); }
};

inline ordered_json dataset_summary(const ChoiceDataset& ds) {
  std::size_t kinds[4] = {};
  for (const auto& p : ds.pairs()) ++kinds[static_cast<std::size_t>(p.kind)];
  ordered_json by_kind;
  for (auto k : kAllKinds) by_kind[std::string(to_string(k))] = kinds[static_cast<std::size_t>(k)];
  ordered_json sessions = ordered_json::array();
  for (auto s : {Session::Time1, Session::Time2}) {
    if (ds.has_session(s)) sessions.push_back(index_of(s) + 1);
  }
  return {{"subjects", ds.subject_count()},
          {"pairs", ds.pair_count()},
          {"pairs_by_kind", by_kind},
          {"sessions", sessions},
          {"complete_session_1", ds.complete(Session::Time1)},
          {"complete_session_2", ds.complete(Session::Time2)}};
}

inline void require_two_sessions(const ChoiceDataset& ds, std::string_view what) {
  if (!ds.has_session(Session::Time1) || !ds.has_session(Session::Time2)) {
    throw InputError(std::string(what) + " needs choices from both sessions");
  }
}

// ---------------------------------------------------------------- clustering

struct Clusters {
  std::vector<shift::Point2> points;
  shift::GmmFit fit;
  shift::Classification classification;
  shift::HomogeneityTest homogeneity;
  std::optional<double> bootstrap_p_value;
  ordered_json json;
};

/// Two-component mixture on each subject's (session 1, session 2) agreement
/// with the population majority. Subjects missing a session are rejected.
inline Clusters cluster(Run& run, const ChoiceDataset& ds, std::size_t bootstrap = 0) {
  require_two_sessions(ds, "clustering");
  const auto stats = subject_majority_stats(ds);
  Clusters c;
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    const auto& s = stats.subjects[i];
    if (!std::isfinite(s.time1) || !std::isfinite(s.time2)) {
      throw InputError("subject '" + ds.subjects()[i] + "' lacks choices in one session");
    }
    c.points.push_back({s.time1, s.time2});
  }
  for (std::size_t s = 0; s < kSessionCount; ++s) {
    if (!stats.tied_pairs[s].empty()) {
      run.note(std::to_string(stats.tied_pairs[s].size()) + " pairs with a tied majority in session " +
               std::to_string(s + 1) + " resolved to B");
    }
  }
  shift::GmmConfig cfg;
  cfg.seed = run.settings.seed;
  c.fit = shift::fit_gmm2(c.points, cfg);
  c.classification = shift::classify_subjects(c.fit);
  c.homogeneity = shift::homogeneity_test(shift::single_gaussian_log_likelihood(c.points, cfg.eigenvalue_floor),
                                          c.fit.log_likelihood);
  if (!c.fit.converged) run.warn("mixture EM did not converge");
  if (c.fit.degenerate) run.warn("mixture fit hit the covariance floor");
  c.json = report::to_json(c.fit, c.classification);
  c.json["homogeneity"] = report::to_json(c.homogeneity);
  if (bootstrap > 0) {
    c.bootstrap_p_value = shift::homogeneity_bootstrap_p_value(c.points, bootstrap, cfg);
    c.json["homogeneity"]["bootstrap_p_value"] = *c.bootstrap_p_value;
    c.json["homogeneity"]["bootstrap_samples"] = bootstrap;
  }
  run.table("clusters.csv", report::cluster_table(ds, c.points, c.fit, c.classification, run.settings.stamp));
  return c;
}

// ------------------------------------------------------------------- fitting

struct FitRequest {
  Models models = Models::Both;
  Level level = Level::Aggregate;
  Session session = Session::Time1;
  est::SubjectFilter filter = est::SubjectFilter::All;
};

struct Fits {
  std::optional<est::AggregateFit> cpt, qdt;
  std::optional<est::HierarchicalFit> cpt_individual, qdt_individual;
  std::optional<est::ModelComparison> comparison;
  ordered_json json;
};

inline void check(Run& run, const est::AggregateFit& f) {
  const std::string name(to_string(f.model));
  if (!f.converged) run.warn(name + " aggregate fit did not converge");
  for (const auto& p : f.at_bound) run.warn(name + " aggregate estimate of " + p + " at its bound");
}

inline void check(Run& run, const est::HierarchicalFit& h) {
  const std::string name(to_string(h.model));
  for (const auto& w : h.priors.warnings) run.warn(name + " priors: " + w);
  const auto stuck = std::count_if(h.fits.begin(), h.fits.end(), [](const auto& f) { return !f.converged; });
  if (stuck > 0) run.warn(name + ": " + std::to_string(stuck) + " individual fits did not converge");
}

/// Aggregate and/or hierarchical fits of the requested models. The aggregate
/// logit-CPT fit always runs, as the starting point of the QDT fit, and the
/// aggregate QDT fit runs whenever QDT is requested because individual QDT
/// fits hold the attraction parameters at its values.
inline Fits fit(Run& run, const ChoiceDataset& ds, const FitRequest& req,
                const std::vector<shift::Group>* labels = nullptr) {
  if (!ds.has_session(req.session)) {
    throw InputError("no choices for session " + std::to_string(index_of(req.session) + 1));
  }
  std::vector<bool> mask;
  if (req.filter != est::SubjectFilter::All) {
    if (!labels) throw DomainError("fit: a subject filter needs cluster labels");
    mask = est::group_mask(*labels, req.filter);
  }
  est::FitConfig agg_cfg;
  agg_cfg.threads = run.settings.threads;
  auto ind_cfg = est::FitConfig::individual();
  ind_cfg.threads = run.settings.threads;

  Fits out;
  out.json = ordered_json::object();
  const bool aggregate = req.level != Level::Individual;
  const bool individual = req.level != Level::Aggregate;
  const auto cpt = est::fit_aggregate(ds, ModelId::LogitCpt, req.session, mask, req.filter, agg_cfg);
  if (includes(req.models, ModelId::LogitCpt)) out.cpt = cpt;
  if (includes(req.models, ModelId::Qdt)) {
    out.qdt = est::fit_aggregate(ds, ModelId::Qdt, req.session, mask, req.filter, agg_cfg, cpt.params.cpt);
  }
  ordered_json agg;
  if (out.cpt) {
    check(run, *out.cpt);
    agg["logit_cpt"] = report::to_json(*out.cpt);
  }
  if (out.qdt) {
    check(run, *out.qdt);
    agg["qdt"] = report::to_json(*out.qdt);
  }
  if (aggregate) out.json["aggregate"] = agg;

  if (individual) {
    if (req.filter != est::SubjectFilter::All) run.note("individual fits ignore the subject filter");
    ordered_json ind;
    if (includes(req.models, ModelId::LogitCpt)) {
      out.cpt_individual = est::fit_hierarchical(ds, ModelId::LogitCpt, req.session, est::Anchor{}, ind_cfg);
      check(run, *out.cpt_individual);
      ind["logit_cpt"] = report::to_json(*out.cpt_individual);
    }
    if (includes(req.models, ModelId::Qdt)) {
      out.qdt_individual = est::fit_hierarchical(ds, ModelId::Qdt, req.session, est::anchor_of(*out.qdt), ind_cfg);
      check(run, *out.qdt_individual);
      ind["qdt"] = report::to_json(*out.qdt_individual);
    }
    out.json["individual"] = ind;
  }

  if (req.models == Models::Both) {
    out.comparison = est::compare_models(ds, *out.cpt, *out.qdt, out.cpt_individual ? &*out.cpt_individual : nullptr,
                                         out.qdt_individual ? &*out.qdt_individual : nullptr, mask);
    out.json["comparison"] = report::to_json(*out.comparison);
    run.table("pair_fit.csv", report::pair_fit_table(out.comparison->cpt, out.comparison->qdt, run.settings.stamp));
  }
  if (individual) {
    report::CsvTable t({"model", "subject_id", "alpha", "lambda", "delta", "gamma", "phi", "log_likelihood",
                        "explained_fraction"},
                       run.settings.stamp, "individual parameter estimates");
    for (const auto* h : {out.cpt_individual ? &*out.cpt_individual : nullptr,
                          out.qdt_individual ? &*out.qdt_individual : nullptr}) {
      if (!h) continue;
      for (const auto& f : h->fits) {
        t.row({std::string(to_string(h->model)), f.subject_id, report::num(f.params.alpha),
               report::num(f.params.lambda), report::num(f.params.delta), report::num(f.params.gamma),
               report::num(f.params.phi), report::num(f.log_likelihood), report::num(f.explained_fraction)});
      }
    }
    run.table("individual.csv", t);
  }
  return out;
}

// ---------------------------------------------------------------- prediction

/// Fits on session 1 and scores session 2, per model and level.
inline ordered_json predict(const ChoiceDataset& ds, const Fits& fits) {
  require_two_sessions(ds, "prediction");
  ordered_json out;
  auto add = [&](const char* key, ModelId model, const auto& source) {
    out[key] = report::to_json(est::predict_session(ds, model, est::per_subject_params(ds, source)));
  };
  if (fits.cpt) add("logit_cpt_aggregate", ModelId::LogitCpt, *fits.cpt);
  if (fits.qdt) add("qdt_aggregate", ModelId::Qdt, *fits.qdt);
  if (fits.cpt_individual) add("logit_cpt_individual", ModelId::LogitCpt, *fits.cpt_individual);
  if (fits.qdt_individual) add("qdt_individual", ModelId::Qdt, *fits.qdt_individual);
  return out;
}

// --------------------------------------------------------------------- shift

struct ShiftSettings {
  std::size_t band_sims = 3000;
  bool pooled = false;
  std::size_t bootstrap = 0;
};

struct ShiftAnalysis {
  std::vector<shift::ShiftObservation> observations;
  Clusters clusters;
  shift::HeteroCalibration fixed;  // F held at the clustered share
  shift::HeteroCalibration free;
  double homogeneous_rss = 0.0;
  ordered_json json;
};

inline ordered_json grid_minimum(const shift::RssSurface& s) {
  std::size_t bi = 0, fi = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.betas.size(); ++i) {
    for (std::size_t k = 0; k < s.fractions.size(); ++k) {
      if (s.at(i, k) < best) {
        best = s.at(i, k);
        bi = i;
        fi = k;
      }
    }
  }
  return {{"shift_beta", s.betas[bi]}, {"F", s.fractions[fi]}, {"rss", best}};
}

inline ShiftAnalysis shift_analysis(Run& run, const ChoiceDataset& ds, const ShiftSettings& cfg = {}) {
  require_two_sessions(ds, "shift analysis");
  ShiftAnalysis a;
  a.observations = shift::shift_observations(ds, cfg.pooled);
  a.clusters = cluster(run, ds, cfg.bootstrap);
  double share = a.clusters.classification.majoritarian_share;
  if (!(share > 0.0 && share < 1.0)) {
    run.warn("clustering put every subject in one group; F fixed at 0.5");
    share = 0.5;
  }
  a.fixed = shift::calibrate_hetero(a.observations, share);
  a.free = shift::calibrate_hetero(a.observations);
  a.homogeneous_rss = shift::hetero_rss(a.observations, shift::HeteroShiftParams::homogeneous());
  if (!a.fixed.converged || !a.free.converged) run.warn("shift calibration did not converge");

  std::vector<double> ps;
  for (const auto& o : a.observations) ps.push_back(o.p);
  shift::BandConfig band_cfg;
  band_cfg.n_sims = cfg.band_sims;
  band_cfg.n_subjects = ds.subject_count();
  band_cfg.seed = run.settings.seed;
  band_cfg.threads = run.settings.threads;
  const auto band = shift::monte_carlo_band(ps, a.fixed.params, band_cfg);
  std::size_t inside = 0;
  for (std::size_t j = 0; j < band.size(); ++j) {
    inside += a.observations[j].shift >= band[j].low && a.observations[j].shift <= band[j].high;
  }

  a.json = {{"pooled_majority", cfg.pooled},
            {"homogeneous_rss", a.homogeneous_rss},
            {"clusters", a.clusters.json},
            {"calibration_fixed_F", report::to_json(a.fixed.params)},
            {"rss_fixed_F", a.fixed.rss},
            {"calibration_free", report::to_json(a.free.params)},
            {"rss_free", a.free.rss},
            {"rss_grid_minimum", grid_minimum(a.fixed.surface)},
            {"band", {{"simulations", cfg.band_sims}, {"pairs_inside", inside}, {"pairs", band.size()}}}};
  run.table("shift_curve.csv", report::shift_curve_table(ds, a.observations, a.fixed.params, band, run.settings.stamp));
  run.table("rss_grid.csv", report::rss_grid_table(a.fixed.surface, run.settings.stamp));
  return a;
}

// ----------------------------------------------------------- predictability

struct PredictabilitySettings {
  ModelId model = ModelId::Qdt;
  double threshold = 0.85;
  bool binomial = false;  // mixture of binomial approximations instead of exact pmfs
};

struct Predictability {
  std::vector<pred::SuccessProfile> profiles;
  std::vector<pred::PredictedFractionDist> dists;
  std::vector<double> observed;  // realized session-2 predicted fractions
  pred::PredictedFractionDist mixture;
  pred::KsResult ks;
  ordered_json json;
};

inline ordered_json moments(const pred::PredictedFractionDist& d) {
  return {{"mean", d.mean()}, {"standard_deviation", std::sqrt(d.variance())}, {"skewness", d.skewness()}};
}

inline ordered_json sample_moments(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double m = 0.0, m2 = 0.0, m3 = 0.0;
  for (double x : xs) m += x / n;
  for (double x : xs) {
    m2 += (x - m) * (x - m) / n;
    m3 += (x - m) * (x - m) * (x - m) / n;
  }
  const double sd = std::sqrt(m2);
  return {{"mean", m}, {"standard_deviation", sd}, {"skewness", sd > 0.0 ? m3 / (sd * sd * sd) : 0.0}};
}

/// Distribution of each subject's predictable fraction under its session-1
/// individual fit, compared with the fraction actually predicted in session 2.
inline Predictability predictability(Run& run, const ChoiceDataset& ds, const est::HierarchicalFit& h,
                                     const PredictabilitySettings& cfg = {}) {
  require_two_sessions(ds, "predictability");
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) throw DomainError("threshold must lie in [0, 1]");
  const auto params = est::per_subject_params(ds, h);
  const auto prediction = est::predict_session(ds, h.model, params, Session::Time2);
  Predictability out;
  for (const auto& score : prediction.subjects) {
    const auto& q = *params[ds.subject_index(score.subject_id)];
    std::vector<double> pa;
    for (const auto& pair : ds.pairs()) pa.push_back(est::prob_a(pair, h.model, q));
    out.profiles.push_back(pred::success_profile(score.subject_id, pa));
    out.dists.push_back(pred::poisson_binomial_dft(out.profiles.back()));
    out.observed.push_back(score.predicted_fraction);
  }
  out.mixture = pred::population_mixture(out.profiles, cfg.binomial);
  out.ks = pred::ks_test(out.mixture, out.observed);

  report::CsvTable tails({"subject_id", "mean_success", "tail_probability", "observed_fraction", "interval_low",
                          "interval_high"},
                         run.settings.stamp, "per-subject tail probability above the threshold");
  std::size_t below_5 = 0, covered = 0;
  for (std::size_t i = 0; i < out.dists.size(); ++i) {
    const double tail = pred::tail_probability(out.dists[i], cfg.threshold);
    below_5 += tail < 0.05;
    const auto [lo, hi] = pred::central_interval(out.dists[i], 0.05);
    const double low = out.dists[i].support(lo), high = out.dists[i].support(hi);
    covered += out.observed[i] >= low - 1e-12 && out.observed[i] <= high + 1e-12;
    tails.row({out.profiles[i].subject_id, report::num(out.dists[i].mean()), report::num(tail),
               report::num(out.observed[i]), report::num(low), report::num(high)});
  }
  run.table("tail_probability.csv", tails);
  run.table("pmf.csv", report::pmf_table(out.profiles, out.dists, run.settings.stamp));

  const std::size_t n = ds.pair_count();
  std::vector<double> hist(n + 1, 0.0);
  for (double f : out.observed) {
    hist[std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))))] +=
        1.0 / static_cast<double>(out.observed.size());
  }
  const stats::EmpiricalCdf ecdf(out.observed);
  report::CsvTable pop({"k", "fraction", "theoretical_pmf", "observed_share", "theoretical_cdf", "empirical_cdf"},
                       run.settings.stamp, "population distribution of predicted fractions");
  for (std::size_t k = 0; k <= n; ++k) {
    const double x = out.mixture.support(k);
    pop.row({std::to_string(k), report::num(x), report::num(out.mixture.pmf[k]), report::num(hist[k]),
             report::num(out.mixture.cdf(x)), report::num(ecdf(x))});
  }
  run.table("population.csv", pop);

  const double subjects = static_cast<double>(out.dists.size());
  out.json = {{"model", to_string(h.model)},
              {"threshold", cfg.threshold},
              {"mixture", cfg.binomial ? "binomial" : "poisson-binomial"},
              {"subjects", out.dists.size()},
              {"share_tail_below_5_percent", static_cast<double>(below_5) / subjects},
              {"share_inside_90_percent_interval", static_cast<double>(covered) / subjects},
              {"theoretical_moments", moments(out.mixture)},
              {"observed_moments", sample_moments(out.observed)},
              {"ks", report::to_json(out.ks)}};
  return out;
}

// --------------------------------------------------------------------- output

/// Writes the run's tables and `json` (as `name`) under `dir`; returns the
/// written paths.
inline std::vector<std::filesystem::path> write(const Run& run, const std::filesystem::path& dir,
                                                const std::string& name, const ordered_json& json) {
  std::vector<std::filesystem::path> files;
  report::write_json(dir / name, json);
  files.push_back(dir / name);
  for (const auto& [file, table] : run.tables) {
    report::write_csv(dir / file, table);
    files.push_back(dir / file);
  }
  return files;
}

/// Complete analysis: aggregate and individual fits of both models on
/// session 1, session-2 prediction, shift analysis and predictability.
inline ordered_json full_report(Run& run, const ChoiceDataset& ds, const ShiftSettings& shift_cfg = {},
                                const PredictabilitySettings& pred_cfg = {}) {
  require_two_sessions(ds, "the report");
  auto j = run.header("report");
  j["dataset"] = dataset_summary(ds);
  const auto fits = fit(run, ds, {Models::Both, Level::Both, Session::Time1, est::SubjectFilter::All});
  j["fits"] = fits.json;
  j["prediction"] = predict(ds, fits);
  j["shift"] = shift_analysis(run, ds, shift_cfg).json;
  const auto& h = pred_cfg.model == ModelId::Qdt ? *fits.qdt_individual : *fits.cpt_individual;
  j["predictability"] = predictability(run, ds, h, pred_cfg).json;
  return j;
}

}  // namespace qdtcal::pipeline
