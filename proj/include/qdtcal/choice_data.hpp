#pragma once

// Lotteries, lottery pairs and recorded binary choices, plus the empirical
// frequencies computed from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qdtcal/error.hpp"

namespace qdtcal {

enum class Option : std::uint8_t { A = 0, B = 1 };
enum class Session : std::uint8_t { Time1 = 0, Time2 = 1 };
enum class PairKind : std::uint8_t { PureGain, PureLoss, Mixed, MixedZero };

inline constexpr std::size_t kSessionCount = 2;
inline constexpr double kProbabilitySumTolerance = 1e-9;

inline Option other(Option o) { return o == Option::A ? Option::B : Option::A; }
inline std::size_t index_of(Session s) { return static_cast<std::size_t>(s); }

inline std::string_view to_string(PairKind k) {
  switch (k) {
    case PairKind::PureGain: return "gain";
    case PairKind::PureLoss: return "loss";
    case PairKind::Mixed: return "mixed";
    case PairKind::MixedZero: return "mixed-zero";
  }
  return "?";
}

inline constexpr PairKind kAllKinds[] = {PairKind::PureGain, PairKind::PureLoss, PairKind::Mixed,
                                         PairKind::MixedZero};

/// Two-outcome lottery: outcome1 with prob1, otherwise outcome2.
struct Lottery {
  double outcome1 = 0.0;
  double prob1 = 1.0;
  double outcome2 = 0.0;
  double prob2 = 0.0;

  /// Validating constructor. `outcome_bound` limits |outcome|; the reference
  /// experiment pays between -100 and 100 MU.
  static Lottery make(double v1, double p1, double v2, double p2, double outcome_bound = 100.0) {
    if (!std::isfinite(v1) || !std::isfinite(v2)) throw DomainError("lottery outcome not finite");
    if (std::abs(v1) > outcome_bound || std::abs(v2) > outcome_bound) {
      throw DomainError("lottery outcome outside [-" + std::to_string(outcome_bound) + ", " +
                        std::to_string(outcome_bound) + "]");
    }
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0)) {
      throw DomainError("lottery probability outside [0, 1]");
    }
    if (std::abs(p1 + p2 - 1.0) > kProbabilitySumTolerance) {
      throw DomainError("lottery probabilities do not sum to 1");
    }
    return Lottery{v1, p1, v2, p2};
  }

  /// Sure outcome (v; 1).
  static Lottery sure(double v) { return Lottery{v, 1.0, v, 0.0}; }

  double expected_value() const { return prob1 * outcome1 + prob2 * outcome2; }
  double min_outcome() const { return std::min(outcome1, outcome2); }

  friend bool operator==(const Lottery&, const Lottery&) = default;
};

/// Sign classes used by the kind rule: a zero outcome is neither a gain nor
/// a loss.
inline PairKind classify_kind(const Lottery& a, const Lottery& b) {
  int gains = 0, losses = 0, zeros = 0;
  for (double v : {a.outcome1, a.outcome2, b.outcome1, b.outcome2}) {
    if (v > 0.0) ++gains;
    else if (v < 0.0) ++losses;
    else ++zeros;
  }
  if (gains == 4) return PairKind::PureGain;
  if (losses == 4) return PairKind::PureLoss;
  if (zeros > 0 && gains > 0 && losses > 0) return PairKind::MixedZero;
  return PairKind::Mixed;
}

struct LotteryPair {
  std::string id;
  Lottery a;
  Lottery b;
  PairKind kind = PairKind::Mixed;

  static LotteryPair make(std::string id, const Lottery& a, const Lottery& b) {
    return LotteryPair{std::move(id), a, b, classify_kind(a, b)};
  }

  /// Same pair with the options relabeled.
  LotteryPair swapped() const { return LotteryPair{id, b, a, kind}; }

  const Lottery& lottery(Option o) const { return o == Option::A ? a : b; }
};

struct ChoiceObservation {
  std::string subject_id;
  std::string pair_id;
  Session session = Session::Time1;
  Option choice = Option::A;

  friend bool operator==(const ChoiceObservation&, const ChoiceObservation&) = default;
};

struct ChoiceCounts {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t total() const { return a + b; }
  std::size_t count(Option o) const { return o == Option::A ? a : b; }
};

/// Validated, immutable collection of pairs and per-(subject, pair, session)
/// choices. Subjects keep the order of their first appearance.
class ChoiceDataset {
 public:
  ChoiceDataset() = default;

  ChoiceDataset(std::vector<LotteryPair> pairs, const std::vector<ChoiceObservation>& observations)
      : pairs_(std::move(pairs)) {
    for (std::size_t j = 0; j < pairs_.size(); ++j) {
      if (pairs_[j].kind != classify_kind(pairs_[j].a, pairs_[j].b)) {
        throw InputError("pair '" + pairs_[j].id + "' has an inconsistent kind");
      }
      if (!pair_index_.emplace(pairs_[j].id, j).second) {
        throw InputError("duplicate pair id '" + pairs_[j].id + "'");
      }
    }
    for (const auto& obs : observations) {
      if (!subject_index_.contains(obs.subject_id)) {
        subject_index_.emplace(obs.subject_id, subjects_.size());
        subjects_.push_back(obs.subject_id);
      }
    }
    choices_.assign(kSessionCount * subjects_.size() * pairs_.size(), kNone);
    for (std::size_t row = 0; row < observations.size(); ++row) {
      const auto& obs = observations[row];
      const auto pair = pair_index_.find(obs.pair_id);
      if (pair == pair_index_.end()) {
        throw InputError("observation references unknown pair '" + obs.pair_id + "'");
      }
      auto& cell = at(subject_index_.at(obs.subject_id), pair->second, obs.session);
      if (cell != kNone) {
        throw InputError("duplicate observation for subject '" + obs.subject_id + "', pair '" +
                         obs.pair_id + "', session " +
                         std::to_string(index_of(obs.session) + 1));
      }
      cell = static_cast<std::int8_t>(obs.choice);
    }
  }

  const std::vector<LotteryPair>& pairs() const { return pairs_; }
  const std::vector<std::string>& subjects() const { return subjects_; }
  std::size_t pair_count() const { return pairs_.size(); }
  std::size_t subject_count() const { return subjects_.size(); }

  std::size_t pair_index(const std::string& id) const {
    const auto it = pair_index_.find(id);
    if (it == pair_index_.end()) throw InputError("unknown pair '" + id + "'");
    return it->second;
  }

  std::size_t subject_index(const std::string& id) const {
    const auto it = subject_index_.find(id);
    if (it == subject_index_.end()) throw InputError("unknown subject '" + id + "'");
    return it->second;
  }

  std::optional<Option> choice(std::size_t subject, std::size_t pair, Session s) const {
    const auto c = at(subject, pair, s);
    if (c == kNone) return std::nullopt;
    return static_cast<Option>(c);
  }

  bool has_session(Session s) const {
    for (std::size_t i = 0; i < subject_count(); ++i) {
      for (std::size_t j = 0; j < pair_count(); ++j) {
        if (at(i, j, s) != kNone) return true;
      }
    }
    return false;
  }

  /// Counts of A and B choices for one pair and session, optionally
  /// restricted to subjects with mask[i] == true.
  ChoiceCounts counts(std::size_t pair, Session s, const std::vector<bool>* mask = nullptr) const {
    ChoiceCounts c;
    for (std::size_t i = 0; i < subject_count(); ++i) {
      if (mask && !(*mask)[i]) continue;
      const auto v = at(i, pair, s);
      if (v == kNone) continue;
      (v == 0 ? c.a : c.b) += 1;
    }
    return c;
  }

  /// Number of pairs answered by a subject in a session.
  std::size_t answered(std::size_t subject, Session s) const {
    std::size_t n = 0;
    for (std::size_t j = 0; j < pair_count(); ++j) n += at(subject, j, s) != kNone;
    return n;
  }

  /// Completeness report: true when every subject answered every pair in `s`.
  bool complete(Session s) const {
    for (std::size_t i = 0; i < subject_count(); ++i) {
      if (answered(i, s) != pair_count()) return false;
    }
    return true;
  }

  /// Observations ordered by (subject, pair, session).
  std::vector<ChoiceObservation> observations() const {
    std::vector<ChoiceObservation> out;
    for (std::size_t i = 0; i < subject_count(); ++i) {
      for (std::size_t j = 0; j < pair_count(); ++j) {
        for (std::size_t s = 0; s < kSessionCount; ++s) {
          if (auto c = choice(i, j, static_cast<Session>(s))) {
            out.push_back({subjects_[i], pairs_[j].id, static_cast<Session>(s), *c});
          }
        }
      }
    }
    return out;
  }

 private:
  static constexpr std::int8_t kNone = -1;

  std::int8_t& at(std::size_t subject, std::size_t pair, Session s) {
    return choices_[(index_of(s) * subjects_.size() + subject) * pairs_.size() + pair];
  }
  std::int8_t at(std::size_t subject, std::size_t pair, Session s) const {
    return choices_[(index_of(s) * subjects_.size() + subject) * pairs_.size() + pair];
  }

  std::vector<LotteryPair> pairs_;
  std::vector<std::string> subjects_;
  std::unordered_map<std::string, std::size_t> pair_index_;
  std::unordered_map<std::string, std::size_t> subject_index_;
  std::vector<std::int8_t> choices_;
};

/// Fraction of responding subjects who chose B. The A frequency is
/// 1 - result, computed from the same counts.
inline double choice_frequency(const ChoiceDataset& ds, std::size_t pair, Session s,
                               const std::vector<bool>* mask = nullptr) {
  const auto c = ds.counts(pair, s, mask);
  if (c.total() == 0) {
    throw InputError("no observations for pair '" + ds.pairs()[pair].id + "' in session " +
                     std::to_string(index_of(s) + 1));
  }
  return static_cast<double>(c.b) / static_cast<double>(c.total());
}

/// Population majority option; ties (frequency exactly 0.5) resolve to B.
inline Option majority_option(const ChoiceDataset& ds, std::size_t pair, Session s) {
  const auto c = ds.counts(pair, s);
  if (c.total() == 0) throw InputError("no observations for pair '" + ds.pairs()[pair].id + "'");
  return c.b >= c.a ? Option::B : Option::A;
}

/// Frequency of the most common choice, in [0.5, 1].
inline double majority_frequency(const ChoiceDataset& ds, std::size_t pair, Session s) {
  const auto c = ds.counts(pair, s);
  if (c.total() == 0) throw InputError("no observations for pair '" + ds.pairs()[pair].id + "'");
  return static_cast<double>(std::max(c.a, c.b)) / static_cast<double>(c.total());
}

/// Fraction of subjects observed in both sessions whose two choices differ.
inline double shift_frequency(const ChoiceDataset& ds, std::size_t pair) {
  std::size_t both = 0, shifted = 0;
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    const auto c1 = ds.choice(i, pair, Session::Time1);
    const auto c2 = ds.choice(i, pair, Session::Time2);
    if (!c1 || !c2) continue;
    ++both;
    shifted += *c1 != *c2;
  }
  if (both == 0) {
    throw InputError("no subject observed in both sessions for pair '" + ds.pairs()[pair].id + "'");
  }
  return static_cast<double>(shifted) / static_cast<double>(both);
}

struct SubjectMajority {
  double time1 = 0.0;  // NaN when the subject has no choices in that session
  double time2 = 0.0;
};

struct MajorityStats {
  std::vector<SubjectMajority> subjects;
  /// Pairs whose majority was a tie (and so resolved to B), per session.
  std::vector<std::size_t> tied_pairs[kSessionCount];
};

/// Per subject and session: fraction of answered pairs on which the subject
/// agreed with the population majority choice.
inline MajorityStats subject_majority_stats(const ChoiceDataset& ds) {
  MajorityStats out;
  std::vector<std::optional<Option>> majority[kSessionCount];
  for (std::size_t s = 0; s < kSessionCount; ++s) {
    const auto session = static_cast<Session>(s);
    majority[s].resize(ds.pair_count());
    for (std::size_t j = 0; j < ds.pair_count(); ++j) {
      const auto c = ds.counts(j, session);
      if (c.total() == 0) continue;
      majority[s][j] = c.b >= c.a ? Option::B : Option::A;
      if (c.a == c.b) out.tied_pairs[s].push_back(j);
    }
  }
  out.subjects.resize(ds.subject_count());
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    double fraction[kSessionCount];
    for (std::size_t s = 0; s < kSessionCount; ++s) {
      std::size_t answered = 0, agree = 0;
      for (std::size_t j = 0; j < ds.pair_count(); ++j) {
        const auto c = ds.choice(i, j, static_cast<Session>(s));
        if (!c || !majority[s][j]) continue;
        ++answered;
        agree += *c == *majority[s][j];
      }
      fraction[s] = answered ? static_cast<double>(agree) / static_cast<double>(answered)
                             : std::nan("");
    }
    out.subjects[i] = {fraction[0], fraction[1]};
  }
  return out;
}

}  // namespace qdtcal
