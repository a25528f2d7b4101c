#pragma once

// Limits of prediction for probabilistic choosers. If a subject picks the
// modal option of pair j with probability p_j >= 1/2, the number of pairs a
// perfect model predicts correctly is Poisson binomial; dividing by N gives
// the predicted fraction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qdtcal/error.hpp"
#include "qdtcal/stats.hpp"

namespace qdtcal::pred {

inline constexpr double kImaginaryTolerance = 1e-9;
inline constexpr double kNegativeTolerance = 1e-12;

struct SuccessProfile {
  std::string subject_id;
  std::vector<double> success_probs;  // max(p_A, p_B) per pair
};

/// Success probabilities from per-pair probabilities of choosing A.
inline SuccessProfile success_profile(std::string subject_id, const std::vector<double>& prob_a) {
  SuccessProfile s{std::move(subject_id), {}};
  s.success_probs.reserve(prob_a.size());
  for (double p : prob_a) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("success_profile: probability outside [0, 1]");
    s.success_probs.push_back(std::max(p, 1.0 - p));
  }
  return s;
}

/// pmf[k] = P(k successes out of N); the support is k / N.
struct PredictedFractionDist {
  std::vector<double> pmf;

  std::size_t trials() const { return pmf.size() - 1; }
  double support(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(trials()); }

  double mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) s += pmf[k] * support(k);
    return s;
  }
  double variance() const {
    const double mu = mean();
    double s = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) s += pmf[k] * (support(k) - mu) * (support(k) - mu);
    return s;
  }
  double skewness() const {
    const double mu = mean(), sd = std::sqrt(variance());
    if (!(sd > 0.0)) return 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) s += pmf[k] * std::pow((support(k) - mu) / sd, 3);
    return s;
  }
  /// P(fraction <= x).
  double cdf(double x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < pmf.size() && support(k) <= x; ++k) s += pmf[k];
    return std::min(s, 1.0);
  }
};

namespace detail {

inline void validate(const SuccessProfile& p) {
  if (p.success_probs.empty()) throw DomainError("predictability: empty success profile");
  for (double q : p.success_probs) {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("predictability: success probability outside [0, 1]");
  }
}

inline PredictedFractionDist clean(std::vector<double> pmf) {
  double total = 0.0;
  for (double& v : pmf) {
    if (v < -kNegativeTolerance) throw NumericalError("poisson binomial: negative probability beyond roundoff");
    v = std::max(v, 0.0);
    total += v;
  }
  for (double& v : pmf) v /= total;
  return {std::move(pmf)};
}

}  // namespace detail

/// Closed-form evaluation through the discrete Fourier transform:
/// P(k) = 1/(N+1) sum_l C^(-lk) prod_m (1 + (C^l - 1) p_m), C = exp(2 pi i/(N+1)).
inline PredictedFractionDist poisson_binomial_dft(const SuccessProfile& profile) {
  detail::validate(profile);
  const std::size_t n = profile.success_probs.size();
  const std::size_t len = n + 1;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(len);
  std::vector<std::complex<double>> chi(len);
  for (std::size_t l = 0; l < len; ++l) {
    const std::complex<double> c = std::polar(1.0, step * static_cast<double>(l));
    std::complex<double> prod{1.0, 0.0};
    for (double p : profile.success_probs) prod *= 1.0 + (c - 1.0) * p;
    chi[l] = prod;
  }
  std::vector<double> pmf(len);
  for (std::size_t k = 0; k < len; ++k) {
    std::complex<double> s{0.0, 0.0};
    for (std::size_t l = 0; l < len; ++l) {
      // Reduce l k modulo N + 1 before forming the angle to keep it accurate.
      const auto r = static_cast<double>((l * k) % len);
      s += chi[l] * std::polar(1.0, -step * r);
    }
    s /= static_cast<double>(len);
    if (std::abs(s.imag()) > kImaginaryTolerance) throw NumericalError("poisson binomial: imaginary residue");
    pmf[k] = s.real();
  }
  return detail::clean(std::move(pmf));
}

/// Exact convolution, one Bernoulli trial at a time.
inline PredictedFractionDist poisson_binomial_dp(const SuccessProfile& profile) {
  detail::validate(profile);
  std::vector<double> pmf{1.0};
  for (double p : profile.success_probs) {
    pmf.push_back(0.0);
    for (std::size_t k = pmf.size() - 1; k > 0; --k) pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    pmf[0] *= 1.0 - p;
  }
  return {std::move(pmf)};
}

/// P(fraction > threshold), strictly greater.
inline double tail_probability(const PredictedFractionDist& d, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw DomainError("tail_probability: threshold outside [0, 1]");
  double s = 0.0;
  for (std::size_t k = 0; k < d.pmf.size(); ++k) {
    if (d.support(k) > threshold) s += d.pmf[k];
  }
  return std::min(s, 1.0);
}

inline PredictedFractionDist binomial_pmf(std::size_t n, double p) {
  std::vector<double> pmf(n + 1, 0.0);
  if (p <= 0.0) {
    pmf[0] = 1.0;
  } else if (p >= 1.0) {
    pmf[n] = 1.0;
  } else {
    for (std::size_t k = 0; k <= n; ++k) {
      const double lc = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                        std::lgamma(static_cast<double>(n - k) + 1.0);
      pmf[k] = std::exp(lc + static_cast<double>(k) * std::log(p) + static_cast<double>(n - k) * std::log1p(-p));
    }
  }
  return detail::clean(std::move(pmf));
}

/// Grid value of the mean success probability: floor(sum p_j) / N, clamped
/// to {ceil(N/2)/N, ..., 1}.
inline double binomial_grid_probability(const SuccessProfile& profile) {
  detail::validate(profile);
  const std::size_t n = profile.success_probs.size();
  double sum = 0.0;
  for (double p : profile.success_probs) sum += p;
  // Guard against sums like 69.99999999999 that should floor to 70.
  const double k = std::floor(sum + 1e-9);
  const double lo = std::ceil(static_cast<double>(n) / 2.0);
  return std::clamp(k, lo, static_cast<double>(n)) / static_cast<double>(n);
}

/// Binomial(N, p_bar) with p_bar from binomial_grid_probability.
inline PredictedFractionDist binomial_approx(const SuccessProfile& profile) {
  return binomial_pmf(profile.success_probs.size(), binomial_grid_probability(profile));
}

inline double total_variation(const PredictedFractionDist& x, const PredictedFractionDist& y) {
  if (x.pmf.size() != y.pmf.size()) throw DomainError("total_variation: supports differ");
  double s = 0.0;
  for (std::size_t k = 0; k < x.pmf.size(); ++k) s += std::abs(x.pmf[k] - y.pmf[k]);
  return 0.5 * s;
}

/// Equal-weight mixture of the subjects' distributions (exact or binomial
/// approximations). All profiles must have the same length.
inline PredictedFractionDist population_mixture(const std::vector<SuccessProfile>& profiles, bool use_approx) {
  if (profiles.empty()) throw DomainError("population_mixture: no profiles");
  const std::size_t n = profiles.front().success_probs.size();
  std::vector<double> pmf(n + 1, 0.0);
  for (const auto& p : profiles) {
    if (p.success_probs.size() != n) throw DomainError("population_mixture: profiles differ in length");
    const auto d = use_approx ? binomial_approx(p) : poisson_binomial_dp(p);
    for (std::size_t k = 0; k <= n; ++k) pmf[k] += d.pmf[k];
  }
  for (double& v : pmf) v /= static_cast<double>(profiles.size());
  return {std::move(pmf)};
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov test of observed fractions against a
/// discrete theoretical distribution. The p-value uses the asymptotic
/// Kolmogorov law with n = number of observations, which is conservative for
/// discrete supports.
inline KsResult ks_test(const PredictedFractionDist& theoretical, const std::vector<double>& observed) {
  if (observed.size() < 5) throw DomainError("ks_test: need at least five observed fractions");
  const stats::EmpiricalCdf ecdf(observed);
  std::vector<double> points = observed;
  for (std::size_t k = 0; k < theoretical.pmf.size(); ++k) points.push_back(theoretical.support(k));
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  // Both CDFs are right-continuous steps, so the supremum of the gap is
  // attained at a jump, either at the point or just before it.
  double d = 0.0, prev_t = 0.0, prev_e = 0.0;
  for (double x : points) {
    d = std::max(d, std::abs(prev_t - prev_e));
    prev_t = theoretical.cdf(x);
    prev_e = ecdf(x);
    d = std::max(d, std::abs(prev_t - prev_e));
  }
  const double n = static_cast<double>(observed.size());
  return {d, stats::kolmogorov_survival(std::sqrt(n) * d), observed.size()};
}

/// Central interval [lo, hi] (as counts) with P(K < lo) <= tail and
/// P(K > hi) <= tail.
inline std::pair<std::size_t, std::size_t> central_interval(const PredictedFractionDist& d, double tail = 0.05) {
  std::size_t lo = 0;
  double below = 0.0;
  while (lo < d.pmf.size() && below + d.pmf[lo] <= tail) below += d.pmf[lo++];
  std::size_t hi = d.pmf.size() - 1;
  double above = 0.0;
  while (hi > lo && above + d.pmf[hi] <= tail) above += d.pmf[hi--];
  return {lo, hi};
}

}  // namespace qdtcal::pred
