#pragma once

// Cumulative prospect theory valuation of two-outcome lotteries (power value
// function, Prelec II weighting) and the logit choice rule built on it.

#include <algorithm>
#include <cmath>
#include <utility>

#include "qdtcal/choice_data.hpp"
#include "qdtcal/error.hpp"

namespace qdtcal {

struct CptParams {
  double alpha = 1.0;   // value-curvature exponent
  double lambda = 1.0;  // loss aversion
  double delta = 1.0;   // weighting elevation
  double gamma = 1.0;   // weighting curvature
  double phi = 1.0;     // logit steepness

  bool valid() const {
    return alpha > 0.0 && lambda > 0.0 && delta > 0.0 && gamma > 0.0 && phi >= 0.0 &&
           std::isfinite(alpha + lambda + delta + gamma + phi);
  }

  void validate() const {
    if (!valid()) throw DomainError("CptParams: alpha, lambda, delta, gamma must be > 0 and phi >= 0");
  }

  friend bool operator==(const CptParams&, const CptParams&) = default;
};

/// Power value function with loss aversion; kinked at 0.
inline double value(double x, const CptParams& p) {
  if (x >= 0.0) return std::pow(x, p.alpha);
  return -p.lambda * std::pow(-x, p.alpha);
}

/// Prelec II probability weighting exp(-delta (-ln p)^gamma). weight(0) = 0 by
/// continuity.
inline double weight(double prob, const CptParams& p) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("weight: probability outside [0, 1]");
  if (prob == 0.0) return 0.0;
  return std::exp(-p.delta * std::pow(-std::log(prob), p.gamma));
}

/// CPT utility of a two-outcome lottery. Same-sign outcomes (zero counts as
/// a gain) are rank-ordered, descending for gains and ascending for losses,
/// and weighted cumulatively; opposite-sign outcomes are weighted separately.
inline double cpt_utility(const Lottery& lot, const CptParams& p) {
  double v1 = lot.outcome1, p1 = lot.prob1;
  double v2 = lot.outcome2, p2 = lot.prob2;
  const bool gain1 = v1 >= 0.0;
  const bool gain2 = v2 >= 0.0;
  if (gain1 == gain2) {
    const bool reorder = gain1 ? v1 < v2 : v1 > v2;
    if (reorder) {
      std::swap(v1, v2);
      std::swap(p1, p2);
    }
    const double w1 = weight(p1, p);
    return w1 * value(v1, p) + (1.0 - w1) * value(v2, p);
  }
  return weight(p1, p) * value(v1, p) + weight(p2, p) * value(v2, p);
}

inline constexpr double kLogitExponentClamp = 700.0;

/// Logistic 1 / (1 + exp(-x)) with the exponent clamped to the double range.
inline double logistic(double x) {
  x = std::clamp(x, -kLogitExponentClamp, kLogitExponentClamp);
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Probability of choosing A: 1 / (1 + exp(phi (uB - uA))).
inline double logit_choice_prob(double u_a, double u_b, double phi) {
  return logistic(phi * (u_a - u_b));
}

}  // namespace qdtcal
