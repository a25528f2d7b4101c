#pragma once

// JSON reports and plot-data CSV files. Every file carries the schema
// version, the seed and a hash of the run configuration, so reruns with the
// same configuration are byte-identical.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdtcal/choice_data.hpp"
#include "qdtcal/csv_io.hpp"
#include "qdtcal/error.hpp"
#include "qdtcal/estimate.hpp"
#include "qdtcal/gmm.hpp"
#include "qdtcal/predictability.hpp"
#include "qdtcal/shift_model.hpp"
#include "qdtcal/simulate.hpp"

namespace qdtcal::report {

using nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Run provenance stamped into every output.
struct Stamp {
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// FNV-1a over the canonical "key=value\n" rendering of a sorted map.
inline std::string config_hash(const std::map<std::string, std::string>& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : config) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

inline ordered_json header(const Stamp& stamp, std::string_view kind) {
  return {{"schema_version", kSchemaVersion}, {"kind", kind}, {"seed", stamp.seed}, {"config_hash", stamp.config_hash}};
}

/// Non-finite numbers become null.
inline ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

inline ordered_json to_json(const CptParams& p) {
  return {{"alpha", p.alpha}, {"lambda", p.lambda}, {"delta", p.delta}, {"gamma", p.gamma}, {"phi", p.phi}};
}

inline ordered_json to_json(ModelId model, const QdtParams& p) {
  auto j = to_json(p.cpt);
  if (model == ModelId::Qdt) {
    j["a"] = p.a;
    j["eta"] = p.eta;
    j["wealth0"] = p.wealth0;
  }
  return j;
}

inline ordered_json to_json(const PriorSpec& p) {
  auto one = [](const LognormalSpec& s) { return ordered_json{{"mu", s.mu}, {"sigma", s.sigma}, {"median", s.median()}}; };
  return {{"alpha", one(p.alpha)}, {"lambda", one(p.lambda)}, {"gamma", one(p.gamma)}, {"delta", one(p.delta)}};
}

inline ordered_json to_json(const est::AggregateFit& f) {
  return {{"model", to_string(f.model)},
          {"session", index_of(f.session) + 1},
          {"subject_filter", est::to_string(f.filter)},
          {"subjects", f.subjects},
          {"observations", f.observations},
          {"free_parameters", free_parameter_count(f.model)},
          {"params", to_json(f.model, f.params)},
          {"log_likelihood", f.log_likelihood},
          {"converged", f.converged},
          {"at_bound", f.at_bound}};
}

inline ordered_json to_json(const est::HierarchicalFit& h) {
  ordered_json subjects = ordered_json::array();
  for (std::size_t k = 0; k < h.fits.size(); ++k) {
    const auto& f = h.fits[k];
    subjects.push_back({{"subject_id", f.subject_id},
                        {"params", to_json(f.params)},
                        {"log_likelihood", f.log_likelihood},
                        {"penalized_objective", f.penalized_objective},
                        {"explained_fraction", f.explained_fraction},
                        {"answered", f.answered},
                        {"converged", f.converged}});
  }
  return {{"model", to_string(h.model)},
          {"session", index_of(h.session) + 1},
          {"anchor", {{"a", h.anchor.a}, {"eta", h.anchor.eta}}},
          {"priors", to_json(h.priors.priors)},
          {"warnings", h.priors.warnings},
          {"mean_log_likelihood", h.mean_log_likelihood()},
          {"mean_explained_fraction", h.mean_explained_fraction()},
          {"subjects", subjects}};
}

inline ordered_json to_json(const est::ModelMetrics& m) {
  ordered_json by_kind;
  for (auto k : kAllKinds) by_kind[std::string(to_string(k))] = m.rss_by_kind[static_cast<std::size_t>(k)];
  ordered_json j{{"model", to_string(m.model)},
                 {"rss_by_kind", by_kind},
                 {"rss_all", m.rss_all},
                 {"correlation", number(m.correlation)},
                 {"log_likelihood", m.log_likelihood}};
  if (m.mean_log_likelihood) j["mean_individual_log_likelihood"] = *m.mean_log_likelihood;
  if (m.mean_explained_fraction) j["mean_explained_fraction"] = *m.mean_explained_fraction;
  return j;
}

inline ordered_json to_json(const est::ModelComparison& c) {
  return {{"session", index_of(c.session) + 1},
          {"logit_cpt", to_json(c.cpt)},
          {"qdt", to_json(c.qdt)},
          {"wilks", {{"statistic", c.wilks.statistic}, {"df", c.wilks.df}, {"p_value", c.wilks.p_value}}}};
}

inline ordered_json to_json(const est::Prediction& p) {
  return {{"session", index_of(p.session) + 1},
          {"subjects", p.subjects.size()},
          {"mean_log_likelihood", p.mean_log_likelihood},
          {"mean_predicted_fraction", p.mean_predicted_fraction},
          {"rss", p.rss}};
}

inline ordered_json to_json(const shift::HeteroShiftParams& p) {
  return {{"shift_alpha", p.shift_alpha}, {"shift_beta", p.shift_beta}, {"F", p.F}};
}

inline ordered_json to_json(const shift::HomogeneityTest& t) {
  return {{"statistic", t.statistic},
          {"df", t.df},
          {"p_value", t.p_value},
          {"log_likelihood_single", t.log_likelihood_single},
          {"log_likelihood_mixture", t.log_likelihood_mixture}};
}

inline ordered_json to_json(const shift::GmmFit& fit, const shift::Classification& cls) {
  ordered_json comps = ordered_json::array();
  for (int k = 0; k < 2; ++k) {
    const auto& g = fit.components[k];
    comps.push_back({{"weight", fit.weights[k]},
                     {"mean", {g.mean[0], g.mean[1]}},
                     {"covariance", {{g.cov.xx, g.cov.xy}, {g.cov.xy, g.cov.yy}}}});
  }
  std::size_t contrarians = 0;
  for (auto g : cls.labels) contrarians += g == shift::Group::Contrarian;
  return {{"components", comps},
          {"log_likelihood", fit.log_likelihood},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"degenerate", fit.degenerate},
          {"majoritarian", cls.labels.size() - contrarians},
          {"contrarian", contrarians},
          {"F", cls.majoritarian_share},
          {"ties", cls.ties.size()}};
}

inline ordered_json to_json(const pred::KsResult& ks) {
  return {{"statistic", ks.statistic}, {"p_value", ks.p_value}, {"n", ks.n}};
}

inline ordered_json to_json(const sim::PopulationTruth& t) {
  ordered_json subjects = ordered_json::array();
  const bool grouped = t.spec.groups.has_value();
  for (const auto& s : t.subjects) {
    ordered_json j{{"subject_id", s.id}, {"params", to_json(s.params)}};
    if (grouped) j["group"] = s.group == shift::Group::Majoritarian ? "majoritarian" : "contrarian";
    subjects.push_back(j);
  }
  ordered_json probs = ordered_json::array();
  for (std::size_t i = 0; i < t.subjects.size(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < t.pairs.size(); ++j) row.push_back(t.probability_a(i, j));
    probs.push_back(row);
  }
  auto spec = ordered_json{{"n_subjects", t.spec.n_subjects},
                           {"model", to_string(t.spec.model)},
                           {"priors", to_json(t.spec.priors)},
                           {"phi", {{"mu", t.spec.phi.mu}, {"sigma", t.spec.phi.sigma}}}};
  if (t.spec.qdt) spec["qdt_anchor"] = {{"a", t.spec.qdt->a}, {"eta", t.spec.qdt->eta}, {"wealth0", t.spec.qdt->wealth0}};
  if (t.spec.groups) spec["groups"] = {{"F", t.spec.groups->F}, {"shift_alpha", t.spec.groups->shift_alpha}};
  ordered_json pair_ids = ordered_json::array();
  for (const auto& p : t.pairs) pair_ids.push_back(p.id);
  return {{"spec", spec}, {"pair_ids", pair_ids}, {"subjects", subjects}, {"prob_a", probs}};
}

/// Minimal CSV table: `#` comment lines with the stamp, then a header row.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> columns, const Stamp& stamp, std::string title)
      : columns_(std::move(columns)), stamp_(stamp), title_(std::move(title)) {}

  CsvTable& row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw DomainError("CsvTable: row width does not match the header");
    rows_.push_back(cells);
    return *this;
  }

  void write(std::ostream& out) const {
    out << "# " << title_ << '\n'
        << "# schema_version=" << kSchemaVersion << " seed=" << stamp_.seed << " config_hash=" << stamp_.config_hash
        << '\n';
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
  Stamp stamp_;
  std::string title_;
};

inline std::string num(double v) { return std::isfinite(v) ? csv::format_number(v) : std::string("nan"); }

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
}

inline void write_json(const std::filesystem::path& path, const ordered_json& j) { write_file(path, j.dump(2) + "\n"); }

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) {
  std::ostringstream s;
  t.write(s);
  write_file(path, s.str());
}

/// Per-pair shift curve: observed shift, homogeneous and heterogeneous
/// predictions and the Monte Carlo band.
inline CsvTable shift_curve_table(const ChoiceDataset& ds, const std::vector<shift::ShiftObservation>& obs,
                                  const shift::HeteroShiftParams& params, const std::vector<shift::BandPoint>& band,
                                  const Stamp& stamp) {
  CsvTable t({"pair_id", "kind", "p", "observed_shift", "homogeneous", "heterogeneous", "band_low", "band_high"},
             stamp, "shift curve per pair");
  for (std::size_t j = 0; j < obs.size(); ++j) {
    t.row({ds.pairs()[j].id, std::string(to_string(ds.pairs()[j].kind)), num(obs[j].p), num(obs[j].shift),
           num(shift::shift_prob_homogeneous(obs[j].p)), num(shift::shift_prob_hetero(obs[j].p, params)),
           num(band[j].low), num(band[j].high)});
  }
  return t;
}

inline CsvTable rss_grid_table(const shift::RssSurface& s, const Stamp& stamp) {
  CsvTable t({"beta", "F", "rss"}, stamp, "rss of the two-group shift model over (beta, F)");
  for (std::size_t i = 0; i < s.betas.size(); ++i) {
    for (std::size_t k = 0; k < s.fractions.size(); ++k) t.row({num(s.betas[i]), num(s.fractions[k]), num(s.at(i, k))});
  }
  return t;
}

inline CsvTable cluster_table(const ChoiceDataset& ds, const std::vector<shift::Point2>& points,
                              const shift::GmmFit& fit, const shift::Classification& cls, const Stamp& stamp) {
  CsvTable t({"subject_id", "majority_fraction_time1", "majority_fraction_time2", "contrarian_posterior", "group"},
             stamp, "subject majority fractions and cluster membership");
  for (std::size_t i = 0; i < points.size(); ++i) {
    t.row({ds.subjects()[i], num(points[i][0]), num(points[i][1]), num(fit.posteriors[i]),
           cls.labels[i] == shift::Group::Majoritarian ? "majoritarian" : "contrarian"});
  }
  return t;
}

inline CsvTable pair_fit_table(const est::ModelMetrics& cpt, const est::ModelMetrics& qdt, const Stamp& stamp) {
  CsvTable t({"pair_id", "kind", "observed_b", "logit_cpt_b", "qdt_b"}, stamp, "predicted versus observed frequency of B");
  for (std::size_t j = 0; j < cpt.pairs.size(); ++j) {
    t.row({cpt.pairs[j].pair_id, std::string(to_string(cpt.pairs[j].kind)), num(cpt.pairs[j].observed_b),
           num(cpt.pairs[j].predicted_b), num(qdt.pairs[j].predicted_b)});
  }
  return t;
}

inline CsvTable pmf_table(const std::vector<pred::SuccessProfile>& profiles,
                          const std::vector<pred::PredictedFractionDist>& dists, const Stamp& stamp) {
  CsvTable t({"subject_id", "k", "fraction", "probability"}, stamp, "per-subject distribution of predicted fractions");
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (std::size_t k = 0; k < dists[i].pmf.size(); ++k) {
      t.row({profiles[i].subject_id, std::to_string(k), num(dists[i].support(k)), num(dists[i].pmf[k])});
    }
  }
  return t;
}

}  // namespace qdtcal::report
