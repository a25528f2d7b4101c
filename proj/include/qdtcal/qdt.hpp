#pragma once

// Prospect probabilities p = f + q: a logit-CPT utility factor f plus an
// attraction factor q = min(f, 1 - f) tanh(a (U_A - U_B)) driven by CARA
// utilities of the two lotteries.

#include <algorithm>
#include <cmath>
#include <span>

#include "qdtcal/choice_data.hpp"
#include "qdtcal/cpt.hpp"
#include "qdtcal/error.hpp"

namespace qdtcal {

inline constexpr double kDefaultWealth = 100.0;
inline constexpr double kProbabilitySlack = 1e-12;

struct QdtParams {
  CptParams cpt;
  double a = 0.0;      // attraction sensitivity
  double eta = 0.05;   // CARA absolute risk aversion
  double wealth0 = kDefaultWealth;

  bool valid() const { return cpt.valid() && a >= 0.0 && eta > 0.0 && std::isfinite(a + eta + wealth0); }

  void validate() const {
    cpt.validate();
    if (!(a >= 0.0) || !(eta > 0.0)) throw DomainError("QdtParams: need a >= 0 and eta > 0");
  }

  friend bool operator==(const QdtParams&, const QdtParams&) = default;
};

struct ProspectProbabilities {
  double f_a = 0.5;  // utility factor
  double q_a = 0.0;  // attraction factor
  double p_a = 0.5;  // prospect probability f_a + q_a
  double p_b = 0.5;  // computed as f_b + q_b, not as 1 - p_a
};

/// CARA utility 1 - exp(-eta (wealth0 + V)).
inline double cara_utility(double v, double eta, double wealth0 = kDefaultWealth) {
  return -std::expm1(-eta * (wealth0 + v));
}

inline double lottery_cara(const Lottery& lot, double eta, double wealth0 = kDefaultWealth) {
  return lot.prob1 * cara_utility(lot.outcome1, eta, wealth0) +
         lot.prob2 * cara_utility(lot.outcome2, eta, wealth0);
}

/// Attraction factor of A. Swapping the roles of A and B negates it.
inline double attraction(double f_a, double u_a, double u_b, double a) {
  if (!(f_a >= 0.0 && f_a <= 1.0)) throw DomainError("attraction: utility factor outside [0, 1]");
  if (a == 0.0) return 0.0;
  return std::min(f_a, 1.0 - f_a) * std::tanh(a * (u_a - u_b));
}

namespace detail {

inline ProspectProbabilities combine(double f_a, double f_b, double q_a) {
  ProspectProbabilities out{f_a, q_a, f_a + q_a, f_b - q_a};
  for (double* p : {&out.p_a, &out.p_b}) {
    if (*p < -kProbabilitySlack || *p > 1.0 + kProbabilitySlack) {
      throw NumericalError("prospect probability outside [0, 1]");
    }
    *p = std::clamp(*p, 0.0, 1.0);
  }
  return out;
}

}  // namespace detail

/// Prospect probabilities from precomputed utilities; the hot path of the
/// likelihood evaluations.
inline ProspectProbabilities prospect_prob(double cpt_a, double cpt_b, double phi, double cara_a,
                                           double cara_b, double a) {
  const double x = phi * (cpt_a - cpt_b);
  const double f_a = logistic(x);
  const double f_b = logistic(-x);
  const double q_a = a == 0.0 ? 0.0 : std::min(f_a, f_b) * std::tanh(a * (cara_a - cara_b));
  return detail::combine(f_a, f_b, q_a);
}

inline ProspectProbabilities prospect_prob(const LotteryPair& pair, const QdtParams& params) {
  return prospect_prob(cpt_utility(pair.a, params.cpt), cpt_utility(pair.b, params.cpt),
                       params.cpt.phi, lottery_cara(pair.a, params.eta, params.wealth0),
                       lottery_cara(pair.b, params.eta, params.wealth0), params.a);
}

/// Logit-CPT probabilities, i.e. the a = 0 member of the family.
inline ProspectProbabilities prospect_prob(const LotteryPair& pair, const CptParams& params) {
  const double x = params.phi * (cpt_utility(pair.a, params) - cpt_utility(pair.b, params));
  return detail::combine(logistic(x), logistic(-x), 0.0);
}

/// Mean absolute attraction factor; equals 1/4 for non-informative priors.
inline double quarter_law_statistic(std::span<const double> qs) {
  if (qs.empty()) throw DomainError("quarter_law_statistic: empty input");
  double s = 0.0;
  for (double q : qs) s += std::abs(q);
  return s / static_cast<double>(qs.size());
}

}  // namespace qdtcal
