#pragma once

// Statistical primitives shared by the calibration pipeline: chi-square tail,
// lognormal density and ML fit, Pearson correlation, residual sum of squares,
// empirical CDF and the asymptotic Kolmogorov distribution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "qdtcal/error.hpp"

namespace qdtcal::stats {

namespace detail {

// Regularized lower incomplete gamma P(a, x) by its power series; converges
// quickly for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by modified Lentz continued
// fraction; used for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Regularized upper incomplete gamma function Q(a, x).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw DomainError("gamma_q: requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_continued_fraction(a, x);
}

/// Upper tail P(X > x) of a chi-square variable with `df` degrees of freedom.
inline double chi_square_survival(double x, double df) {
  if (!(x >= 0.0) || !(df >= 1.0)) {
    throw DomainError("chi_square_survival: requires x >= 0 and df >= 1");
  }
  return gamma_q(0.5 * df, 0.5 * x);
}

inline double lognormal_log_pdf(double x, double mu, double sigma) {
  if (!(x > 0.0)) throw DomainError("lognormal_log_pdf: x must be positive");
  if (!(sigma > 0.0)) throw DomainError("lognormal_log_pdf: sigma must be positive");
  const double z = (std::log(x) - mu) / sigma;
  return -std::log(x * sigma * std::sqrt(2.0 * std::numbers::pi)) - 0.5 * z * z;
}

struct LognormalFit {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Maximum-likelihood lognormal fit: mean and (biased, ML) standard deviation
/// of the log-values. `sigma_floor` guards against degenerate point masses.
inline LognormalFit lognormal_ml(std::span<const double> xs, double sigma_floor = 0.0) {
  if (xs.size() < 2) throw DomainError("lognormal_ml: need at least two values");
  double sum = 0.0;
  for (double x : xs) {
    if (!(x > 0.0)) throw DomainError("lognormal_ml: values must be positive");
    sum += std::log(x);
  }
  const double n = static_cast<double>(xs.size());
  const double mu = sum / n;
  double ss = 0.0;
  for (double x : xs) {
    const double d = std::log(x) - mu;
    ss += d * d;
  }
  return {mu, std::max(std::sqrt(ss / n), sigma_floor)};
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean: empty input");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw DomainError("pearson: inputs must have equal length >= 2");
  }
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

inline double rss(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw DomainError("rss: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - observed[i];
    s += d * d;
  }
  return s;
}

/// Right-continuous step CDF of a finite sample.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> sample) : sorted_(std::move(sample)) {
    if (sorted_.empty()) throw DomainError("EmpiricalCdf: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  const std::vector<double>& sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

/// Survival function of the Kolmogorov distribution, P(K > lambda), where
/// K = sup |B(t)| for a Brownian bridge B.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-transformed series converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double m = 2.0 * k - 1.0;
      s += std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? t : -t);
    if (t < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// Quantile with linear interpolation between order statistics (R type 7).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DomainError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q outside [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace qdtcal::stats
