// qdtcal command-line tool. Exit codes: 0 success, 1 success with analysis
// warnings, 2 invalid input or arguments, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "qdtcal/pipeline.hpp"

namespace fs = std::filesystem;
using namespace qdtcal;
using pipeline::ordered_json;

namespace {

constexpr int kWarning = 1;
constexpr int kInputError = 2;
constexpr int kNumericalError = 3;

struct Common {
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string pairs;
  std::string choices;
};

std::string default_output_dir() {
  const char* env = std::getenv("QDTCAL_OUTPUT_DIR");
  return env && *env ? env : ".";
}

// Resolved value of every option that can change results, keyed by long name.
std::map<std::string, std::string> resolved_config(const CLI::App& app, const CLI::App* sub) {
  static const std::set<std::string> ignored{"threads", "config", "out", "help"};
  std::map<std::string, std::string> cfg;
  auto collect = [&](const CLI::App& a, const std::string& prefix) {
    for (const auto* opt : a.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (ignored.contains(name)) continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      } else {
        value = opt->get_default_str();
      }
      cfg[prefix + name] = value;
    }
  };
  collect(app, "");
  collect(*sub, sub->get_name() + ".");
  return cfg;
}

ChoiceDataset load(const Common& c) {
  if (c.pairs.empty() || c.choices.empty()) throw InputError("--pairs and --choices are required");
  return csv::load_dataset(c.pairs, c.choices);
}

ModelId parse_model(const std::string& s) { return s == "qdt" ? ModelId::Qdt : ModelId::LogitCpt; }

Session parse_session(int s) { return s == 2 ? Session::Time2 : Session::Time1; }

int finish(const pipeline::Run& run, const fs::path& dir, const std::string& name, ordered_json j) {
  j["warnings"] = run.warnings;
  j["notes"] = run.notes;
  for (const auto& f : pipeline::write(run, dir, name, j)) std::cout << f.string() << '\n';
  for (const auto& n : run.notes) std::cerr << "note: " << n << '\n';
  for (const auto& w : run.warnings) std::cerr << "warning: " << w << '\n';
  return run.warnings.empty() ? 0 : kWarning;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration of logit-CPT and QDT choice models on two-session lottery experiments"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  Common c;
  c.out = default_output_dir();
  app.add_option("--threads", c.threads, "worker threads (0 = all cores)");
  app.add_option("--seed", c.seed, "seed for every random stream");
  app.add_option("--out", c.out, "output directory (default $QDTCAL_OUTPUT_DIR or .)");
  app.add_option("--pairs", c.pairs, "lottery pair CSV");
  app.add_option("--choices", c.choices, "choice observation CSV");

  auto* ingest = app.add_subcommand("ingest", "validate a dataset and summarize it");

  auto* simulate = app.add_subcommand("simulate", "write a synthetic two-session dataset and its truth");
  std::size_t n_subjects = 142, sessions = 2;
  std::uint64_t pair_seed = sim::kReferencePairSeed;
  std::string sim_model = "logit-cpt";
  double sigma = 0.2, attraction = 1.47, eta = 0.05, share = 0.73, tilt = 0.6;
  bool groups = false;
  simulate->add_option("--subjects", n_subjects);
  simulate->add_option("--sessions", sessions)->check(CLI::Range(1, 2));
  simulate->add_option("--pair-seed", pair_seed, "seed of the random reference pairs");
  simulate->add_option("--model", sim_model)->check(CLI::IsMember({"logit-cpt", "qdt"}));
  simulate->add_option("--sigma", sigma, "log-scale spread of every subject parameter");
  simulate->add_option("--a", attraction, "QDT attraction strength");
  simulate->add_option("--eta", eta, "QDT CARA coefficient");
  simulate->add_flag("--groups", groups, "majoritarian and contrarian groups");
  simulate->add_option("--F", share, "majoritarian share");
  simulate->add_option("--shift-alpha", tilt, "majoritarian tilt");

  auto* fit = app.add_subcommand("fit", "maximum-likelihood fits on one session");
  std::string fit_model = "both", level = "aggregate", filter = "all";
  int session = 1;
  fit->add_option("--model", fit_model)->check(CLI::IsMember({"logit-cpt", "qdt", "both"}));
  fit->add_option("--level", level)->check(CLI::IsMember({"aggregate", "individual", "both"}));
  fit->add_option("--session", session)->check(CLI::Range(1, 2));
  fit->add_option("--filter", filter, "subject group (needs both sessions)")
      ->check(CLI::IsMember({"all", "majoritarian", "contrarian"}));

  auto* predict = app.add_subcommand("predict", "fit session 1 and score session 2");
  std::string predict_level = "both";
  predict->add_option("--level", predict_level)->check(CLI::IsMember({"aggregate", "individual", "both"}));

  auto* shift_cmd = app.add_subcommand("shift", "choice-shift analysis and two-group calibration");
  pipeline::ShiftSettings shift_cfg;
  shift_cmd->add_option("--band-sims", shift_cfg.band_sims)->check(CLI::PositiveNumber);
  shift_cmd->add_flag("--pooled", shift_cfg.pooled, "majority frequency pooled over both sessions");
  shift_cmd->add_option("--bootstrap", shift_cfg.bootstrap, "bootstrap samples for the homogeneity test");

  auto* cluster = app.add_subcommand("cluster", "two-component mixture of subject majority agreement");
  std::size_t cluster_bootstrap = 0;
  cluster->add_option("--bootstrap", cluster_bootstrap, "bootstrap samples for the homogeneity test");

  auto* predictability = app.add_subcommand("predictability", "theoretical limits of individual prediction");
  pipeline::PredictabilitySettings pred_cfg;
  std::string pred_model = "qdt";
  predictability->add_option("--model", pred_model)->check(CLI::IsMember({"logit-cpt", "qdt"}));
  predictability->add_option("--threshold", pred_cfg.threshold)->check(CLI::Range(0.0, 1.0));
  predictability->add_flag("--binomial", pred_cfg.binomial, "mix binomial approximations");

  auto* report_cmd = app.add_subcommand("report", "every analysis in one run");
  report_cmd->add_option("--band-sims", shift_cfg.band_sims)->check(CLI::PositiveNumber);
  report_cmd->add_option("--threshold", pred_cfg.threshold)->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  const CLI::App* sub = app.get_subcommands().front();
  pipeline::Run run;
  run.settings.threads = c.threads;
  run.settings.seed = c.seed;
  run.settings.stamp = {c.seed, report::config_hash(resolved_config(app, sub))};
  const fs::path dir = c.out;

  try {
    if (sub == ingest) {
      const auto ds = load(c);
      auto j = run.header("ingest");
      j["dataset"] = pipeline::dataset_summary(ds);
      return finish(run, dir, "ingest.json", j);
    }
    if (sub == simulate) {
      auto spec = sim::PopulationSpec::centered(
          sim_model == "qdt" ? sim::reference_qdt_cpt() : sim::reference_logit_cpt(), sigma, parse_model(sim_model));
      spec.n_subjects = n_subjects;
      spec.seed = c.seed;
      if (spec.qdt) spec.qdt = sim::QdtAnchor{attraction, eta, kDefaultWealth};
      if (groups) spec.groups = sim::GroupSpec{share, tilt};
      sim::PopulationTruth truth;
      try {
        truth = sim::sample_population(spec, sim::reference_pairs(pair_seed), c.threads);
      } catch (const DomainError& e) {
        throw InputError(std::string("invalid population: ") + e.what());
      }
      const auto ds = sim::simulate_choices(truth, sessions, c.seed);
      std::ostringstream pairs, choices;
      const std::string stamp = "# schema_version=" + std::to_string(report::kSchemaVersion) +
                                " seed=" + std::to_string(c.seed) + " config_hash=" + run.settings.stamp.config_hash +
                                "\n";
      pairs << stamp;
      csv::write_pairs(pairs, ds.pairs());
      choices << stamp;
      csv::write_observations(choices, ds);
      report::write_file(dir / "pairs.csv", pairs.str());
      report::write_file(dir / "choices.csv", choices.str());
      auto j = run.header("truth");
      j["truth"] = report::to_json(truth);
      report::write_json(dir / "truth.json", j);
      for (const char* f : {"pairs.csv", "choices.csv", "truth.json"}) std::cout << (dir / f).string() << '\n';
      return 0;
    }
    const auto ds = load(c);
    if (sub == fit) {
      const auto models = fit_model == "both"  ? pipeline::Models::Both
                          : fit_model == "qdt" ? pipeline::Models::Qdt
                                               : pipeline::Models::LogitCpt;
      const auto lvl = level == "both"         ? pipeline::Level::Both
                       : level == "individual" ? pipeline::Level::Individual
                                               : pipeline::Level::Aggregate;
      const auto flt = filter == "majoritarian" ? est::SubjectFilter::Majoritarian
                       : filter == "contrarian" ? est::SubjectFilter::Contrarian
                                                : est::SubjectFilter::All;
      auto j = run.header("fit");
      std::optional<pipeline::Clusters> clusters;
      if (flt != est::SubjectFilter::All) {
        clusters = pipeline::cluster(run, ds);
        j["clusters"] = clusters->json;
      }
      const auto fits = pipeline::fit(run, ds, {models, lvl, parse_session(session), flt},
                                      clusters ? &clusters->classification.labels : nullptr);
      j.update(fits.json);
      return finish(run, dir, "fit.json", j);
    }
    if (sub == predict) {
      const auto lvl = predict_level == "both"         ? pipeline::Level::Both
                       : predict_level == "individual" ? pipeline::Level::Individual
                                                       : pipeline::Level::Aggregate;
      pipeline::require_two_sessions(ds, "prediction");
      const auto fits = pipeline::fit(run, ds, {pipeline::Models::Both, lvl, Session::Time1});
      auto j = run.header("predict");
      j["fits"] = fits.json;
      auto scored = pipeline::predict(ds, fits);
      if (lvl == pipeline::Level::Individual) {
        scored.erase("logit_cpt_aggregate");
        scored.erase("qdt_aggregate");
      }
      j["prediction"] = scored;
      return finish(run, dir, "predict.json", j);
    }
    if (sub == shift_cmd) {
      auto j = run.header("shift");
      j["shift"] = pipeline::shift_analysis(run, ds, shift_cfg).json;
      return finish(run, dir, "shift.json", j);
    }
    if (sub == cluster) {
      auto j = run.header("cluster");
      j["clusters"] = pipeline::cluster(run, ds, cluster_bootstrap).json;
      return finish(run, dir, "cluster.json", j);
    }
    if (sub == predictability) {
      pred_cfg.model = parse_model(pred_model);
      pipeline::require_two_sessions(ds, "predictability");
      const auto models = pred_cfg.model == ModelId::Qdt ? pipeline::Models::Qdt : pipeline::Models::LogitCpt;
      const auto fits = pipeline::fit(run, ds, {models, pipeline::Level::Individual, Session::Time1});
      const auto& h = pred_cfg.model == ModelId::Qdt ? *fits.qdt_individual : *fits.cpt_individual;
      auto j = run.header("predictability");
      j["predictability"] = pipeline::predictability(run, ds, h, pred_cfg).json;
      return finish(run, dir, "predictability.json", j);
    }
    if (sub == report_cmd) {
      return finish(run, dir, "report.json", pipeline::full_report(run, ds, shift_cfg, pred_cfg));
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  }
  return kInputError;
}
