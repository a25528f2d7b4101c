#pragma once

// Synthetic populations and choices with known ground truth.
//
// Streams: subject i draws its parameters from (seed, {1, i}); group labels
// come from (seed, {2}); the choices of subject i at session s come from
// (seed, {3, i, s}), consumed in pair order. Results therefore do not depend
// on the number of worker threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qdtcal/choice_data.hpp"
#include "qdtcal/error.hpp"
#include "qdtcal/gmm.hpp"
#include "qdtcal/model.hpp"
#include "qdtcal/parallel.hpp"
#include "qdtcal/qdt.hpp"
#include "qdtcal/rng.hpp"
#include "qdtcal/shift_model.hpp"

namespace qdtcal::sim {

inline constexpr std::uint64_t kReferencePairSeed = 2011;

namespace detail {

inline std::string numbered(char prefix, std::size_t k) {
  std::string s(1, prefix);
  if (k < 10) s += '0';
  return s + std::to_string(k);
}

inline double two_decimals(Rng& rng, int lo, int hi) {
  return static_cast<double>(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)))) / 100.0;
}

inline double magnitude(Rng& rng, int lo = 1, int hi = 100) {
  return static_cast<double>(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
}

inline Lottery same_sign(Rng& rng, double sign) {
  const double p = two_decimals(rng, 5, 95);
  return Lottery::make(sign * magnitude(rng), p, sign * magnitude(rng), 1.0 - p);
}

inline Lottery mixed(Rng& rng) {
  const double p = two_decimals(rng, 10, 90);
  return Lottery::make(magnitude(rng), p, -magnitude(rng), 1.0 - p);
}

/// Neither option dominates outright and the expected values are close,
/// which keeps choices away from certainty.
inline bool interesting(const Lottery& a, const Lottery& b) {
  const auto lo = [](const Lottery& l) { return std::min(l.outcome1, l.outcome2); };
  const auto hi = [](const Lottery& l) { return std::max(l.outcome1, l.outcome2); };
  if (lo(a) >= hi(b) || lo(b) >= hi(a)) return false;
  return std::abs(a.expected_value() - b.expected_value()) <= 15.0 && !(a == b);
}

}  // namespace detail

/// A 91-pair set with the composition of the reference experiment: 35 gain,
/// 25 loss, 25 mixed and 6 mixed-zero pairs. The four pairs whose majority
/// choice shifted between sessions in the original data open their groups;
/// the remainder are drawn from `seed`.
inline std::vector<LotteryPair> reference_pairs(std::uint64_t seed = kReferencePairSeed) {
  std::vector<LotteryPair> out;
  out.push_back(LotteryPair::make("g01", Lottery::make(56, 0.05, 72, 0.95), Lottery::make(68, 0.95, 95, 0.05)));
  out.push_back(LotteryPair::make("g02", Lottery::make(88, 0.29, 78, 0.71), Lottery::make(53, 0.29, 91, 0.71)));
  Rng rng(seed, {0x9a12});
  auto fill = [&](char prefix, std::size_t first, std::size_t last, auto draw) {
    for (std::size_t k = first; k <= last; ++k) {
      for (;;) {
        const Lottery a = draw(), b = draw();
        if (!detail::interesting(a, b)) continue;
        out.push_back(LotteryPair::make(detail::numbered(prefix, k), a, b));
        break;
      }
    }
  };
  fill('g', 3, 35, [&] { return detail::same_sign(rng, 1.0); });
  out.push_back(LotteryPair::make("l01", Lottery::make(-8, 0.66, -95, 0.34), Lottery::make(-42, 0.93, -30, 0.07)));
  fill('l', 2, 25, [&] { return detail::same_sign(rng, -1.0); });
  out.push_back(LotteryPair::make("m01", Lottery::make(96, 0.61, -67, 0.39), Lottery::make(71, 0.50, -26, 0.50)));
  fill('m', 2, 25, [&] { return detail::mixed(rng); });
  for (std::size_t k = 1; k <= 6; ++k) {
    // Accept-or-reject a coin flip against the status quo.
    const double gain = detail::magnitude(rng, 10, 100);
    const double loss = -std::round(gain * detail::two_decimals(rng, 40, 120));
    out.push_back(LotteryPair::make(detail::numbered('z', k), Lottery::make(gain, 0.5, std::max(loss, -100.0), 0.5),
                                    Lottery::sure(0.0)));
  }
  return out;
}

struct QdtAnchor {
  double a = 1.47;
  double eta = 0.05;
  double wealth0 = kDefaultWealth;
};

/// Two-group generation: the majoritarian share F and its tilt; the
/// contrarian tilt follows from the link.
struct GroupSpec {
  double F = 0.73;
  double shift_alpha = 0.6;
};

struct PopulationSpec {
  std::size_t n_subjects = 142;
  ModelId model = ModelId::LogitCpt;
  PriorSpec priors;
  LognormalSpec phi;
  std::optional<QdtAnchor> qdt;
  std::optional<GroupSpec> groups;
  std::uint64_t seed = 0;

  /// Lognormal population with the given medians and one log-scale spread.
  static PopulationSpec centered(const CptParams& median, double sigma, ModelId model = ModelId::LogitCpt) {
    PopulationSpec s;
    s.model = model;
    s.priors = {{std::log(median.alpha), sigma},
                {std::log(median.lambda), sigma},
                {std::log(median.gamma), sigma},
                {std::log(median.delta), sigma}};
    s.phi = {std::log(median.phi), sigma};
    if (model == ModelId::Qdt) s.qdt = QdtAnchor{};
    return s;
  }

  void validate() const {
    if (n_subjects == 0) throw DomainError("population spec: n_subjects must be positive");
    priors.validate();
    phi.validate();
    if (model == ModelId::Qdt) {
      if (!qdt) throw DomainError("population spec: the qdt model needs an (a, eta) anchor");
      QdtParams{CptParams{}, qdt->a, qdt->eta, qdt->wealth0}.validate();
    }
    if (groups) shift::HeteroShiftParams::from_alpha(groups->shift_alpha, groups->F);
  }
};

/// Median logit-CPT parameters of the reference aggregate fit.
inline CptParams reference_logit_cpt() { return {0.73, 1.11, 0.88, 0.65, 0.30}; }

/// Median QDT parameters of the reference aggregate fit (a = 1.47, eta = 0.05).
inline CptParams reference_qdt_cpt() { return {0.69, 1.02, 0.89, 0.63, 0.37}; }

struct SubjectTruth {
  std::string id;
  CptParams params;
  shift::Group group = shift::Group::Majoritarian;
};

struct PopulationTruth {
  PopulationSpec spec;
  std::vector<LotteryPair> pairs;
  std::vector<SubjectTruth> subjects;
  /// prob_a[i * pairs.size() + j]: probability that subject i picks A on pair j.
  std::vector<double> prob_a;
  /// Two-group mode only: population majority option and its probability.
  std::vector<Option> majority;
  std::vector<double> baseline;

  double probability_a(std::size_t subject, std::size_t pair) const {
    return prob_a[subject * pairs.size() + pair];
  }
};

inline std::string subject_id(std::size_t i) {
  std::string digits = std::to_string(i + 1);
  return "s" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

/// Draws every subject's parameters and true choice probabilities. In
/// two-group mode the model fixes each pair's baseline majority probability p
/// (the population average), and subjects then use the tilted group
/// probabilities p1 or p2 for the majority option.
inline PopulationTruth sample_population(const PopulationSpec& spec, std::vector<LotteryPair> pairs,
                                         unsigned threads = 1) {
  spec.validate();
  if (pairs.empty()) throw DomainError("sample_population: no pairs");
  PopulationTruth t;
  t.spec = spec;
  t.pairs = std::move(pairs);
  const std::size_t n = spec.n_subjects, m = t.pairs.size();
  t.subjects.resize(n);
  t.prob_a.resize(n * m);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(spec.seed, {1, i});
    auto& s = t.subjects[i];
    s.id = subject_id(i);
    s.params.alpha = rng.lognormal(spec.priors.alpha.mu, spec.priors.alpha.sigma);
    s.params.lambda = rng.lognormal(spec.priors.lambda.mu, spec.priors.lambda.sigma);
    s.params.gamma = rng.lognormal(spec.priors.gamma.mu, spec.priors.gamma.sigma);
    s.params.delta = rng.lognormal(spec.priors.delta.mu, spec.priors.delta.sigma);
    s.params.phi = rng.lognormal(spec.phi.mu, spec.phi.sigma);
    for (std::size_t j = 0; j < m; ++j) {
      t.prob_a[i * m + j] = spec.model == ModelId::Qdt
                                ? prospect_prob(t.pairs[j], QdtParams{s.params, spec.qdt->a, spec.qdt->eta,
                                                                      spec.qdt->wealth0})
                                      .p_a
                                : prospect_prob(t.pairs[j], s.params).p_a;
    }
  });

  if (spec.groups) {
    const auto params = shift::HeteroShiftParams::from_alpha(spec.groups->shift_alpha, spec.groups->F);
    const auto n_major = static_cast<std::size_t>(std::llround(params.F * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed, {2});
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    for (std::size_t k = 0; k < n; ++k) {
      t.subjects[order[k]].group = k < n_major ? shift::Group::Majoritarian : shift::Group::Contrarian;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double mean_a = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean_a += t.prob_a[i * m + j];
      mean_a /= static_cast<double>(n);
      const Option maj = mean_a > 0.5 ? Option::A : Option::B;
      const double p = maj == Option::A ? mean_a : 1.0 - mean_a;
      t.majority.push_back(maj);
      t.baseline.push_back(p);
      const auto g = shift::group_probs(p, params);
      for (std::size_t i = 0; i < n; ++i) {
        const double p_maj = t.subjects[i].group == shift::Group::Majoritarian ? g.majoritarian : g.contrarian;
        t.prob_a[i * m + j] = maj == Option::A ? p_maj : 1.0 - p_maj;
      }
    }
  }
  return t;
}

/// Independent Bernoulli choices for every subject, pair and session.
inline ChoiceDataset simulate_choices(const PopulationTruth& truth, std::size_t sessions = 2,
                                      std::uint64_t seed = 0) {
  if (sessions < 1 || sessions > kSessionCount) throw DomainError("simulate_choices: sessions must be 1 or 2");
  const std::size_t n = truth.subjects.size(), m = truth.pairs.size();
  std::vector<ChoiceObservation> obs;
  obs.reserve(n * m * sessions);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < sessions; ++s) {
      Rng rng(seed, {3, i, s});
      for (std::size_t j = 0; j < m; ++j) {
        const Option c = rng.bernoulli(truth.probability_a(i, j)) ? Option::A : Option::B;
        obs.push_back({truth.subjects[i].id, truth.pairs[j].id, static_cast<Session>(s), c});
      }
    }
  }
  return ChoiceDataset(truth.pairs, obs);
}

}  // namespace qdtcal::sim
