#pragma once

// Two-component bivariate Gaussian mixture fitted by EM, used to split
// subjects by how often they follow the majority choice in each session.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "qdtcal/error.hpp"
#include "qdtcal/rng.hpp"
#include "qdtcal/stats.hpp"

namespace qdtcal::shift {

using Point2 = std::array<double, 2>;

struct Cov2 {
  double xx = 1.0, xy = 0.0, yy = 1.0;

  double det() const { return xx * yy - xy * xy; }
};

struct Gaussian2 {
  Point2 mean{0.0, 0.0};
  Cov2 cov;

  double log_pdf(const Point2& x) const {
    const double d = cov.det();
    const double dx = x[0] - mean[0], dy = x[1] - mean[1];
    const double q = (cov.yy * dx * dx - 2.0 * cov.xy * dx * dy + cov.xx * dy * dy) / d;
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(d) - 0.5 * q;
  }
};

struct GmmConfig {
  double tolerance = 1e-8;         // stop when the log-likelihood gains less
  std::size_t max_iterations = 500;
  std::size_t restarts = 10;
  std::size_t kmeans_iterations = 10;
  double eigenvalue_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GmmFit {
  /// Component 0 has the larger mean majority fraction (x + y).
  std::array<double, 2> weights{0.5, 0.5};
  std::array<Gaussian2, 2> components;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  /// Membership probability of component 1 per point.
  std::vector<double> posteriors;
  std::vector<double> log_likelihood_trace;  // one entry per EM iteration of the winning restart
  std::size_t iterations = 0;
  bool converged = false;
  bool degenerate = false;  // covariance floor engaged
};

namespace detail {

/// Raises the eigenvalues of a symmetric 2x2 matrix to at least `floor`.
inline Cov2 floor_eigenvalues(const Cov2& c, double floor, bool& engaged) {
  const double tr = c.xx + c.yy;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (c.xx - c.yy) * (c.xx - c.yy) + c.xy * c.xy));
  const double l1 = 0.5 * tr + disc, l2 = 0.5 * tr - disc;
  if (l2 >= floor) return c;
  engaged = true;
  // Unit eigenvector of l1.
  double vx, vy;
  if (std::abs(c.xy) > 1e-300) {
    vx = l1 - c.yy;
    vy = c.xy;
  } else {
    vx = c.xx >= c.yy ? 1.0 : 0.0;
    vy = c.xx >= c.yy ? 0.0 : 1.0;
  }
  const double norm = std::hypot(vx, vy);
  vx /= norm;
  vy /= norm;
  const double m1 = std::max(l1, floor), m2 = std::max(l2, floor);
  // V diag(m1, m2) V^T with second eigenvector (-vy, vx).
  return {m1 * vx * vx + m2 * vy * vy, (m1 - m2) * vx * vy, m1 * vy * vy + m2 * vx * vx};
}

inline Gaussian2 weighted_gaussian(const std::vector<Point2>& pts, const std::vector<double>& w,
                                   double floor, bool& engaged) {
  double sw = 0.0;
  Point2 m{0.0, 0.0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sw += w[i];
    m[0] += w[i] * pts[i][0];
    m[1] += w[i] * pts[i][1];
  }
  if (!(sw > 0.0)) {
    engaged = true;
    return {{0.5, 0.5}, {floor, 0.0, floor}};
  }
  m[0] /= sw;
  m[1] /= sw;
  Cov2 c{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = pts[i][0] - m[0], dy = pts[i][1] - m[1];
    c.xx += w[i] * dx * dx;
    c.xy += w[i] * dx * dy;
    c.yy += w[i] * dy * dy;
  }
  c.xx /= sw;
  c.xy /= sw;
  c.yy /= sw;
  return {m, floor_eigenvalues(c, floor, engaged)};
}

inline double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace detail

/// Maximum-likelihood single Gaussian (covariance floored like the mixture).
inline double single_gaussian_log_likelihood(const std::vector<Point2>& pts, double eigenvalue_floor = 1e-6) {
  bool engaged = false;
  const auto g = detail::weighted_gaussian(pts, std::vector<double>(pts.size(), 1.0), eigenvalue_floor, engaged);
  double ll = 0.0;
  for (const auto& p : pts) ll += g.log_pdf(p);
  return ll;
}

/// Two-component EM with k-means-seeded restarts; keeps the restart with the
/// highest final log-likelihood.
inline GmmFit fit_gmm2(const std::vector<Point2>& pts, const GmmConfig& cfg = {}) {
  if (pts.size() < 10) throw DomainError("fit_gmm2: need at least 10 points");
  for (const auto& p : pts) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw DomainError("fit_gmm2: non-finite point");
  }
  if (cfg.restarts == 0 || cfg.max_iterations == 0) throw DomainError("fit_gmm2: counts must be positive");
  const std::size_t n = pts.size();
  auto dist2 = [](const Point2& a, const Point2& b) {
    return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
  };

  GmmFit best;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(cfg.seed, {0x6a7a, r});
    // k-means++ style seeding followed by a few Lloyd iterations.
    std::array<Point2, 2> centres{pts[rng.below(n)], pts[0]};
    {
      std::vector<double> d(n);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += d[i] = dist2(pts[i], centres[0]);
      std::size_t pick = rng.below(n);
      if (total > 0.0) {
        double u = rng.uniform() * total;
        for (pick = 0; pick + 1 < n && u >= d[pick]; ++pick) u -= d[pick];
      }
      centres[1] = pts[pick];
    }
    std::vector<int> label(n, 0);
    for (std::size_t it = 0; it < cfg.kmeans_iterations; ++it) {
      for (std::size_t i = 0; i < n; ++i) label[i] = dist2(pts[i], centres[1]) < dist2(pts[i], centres[0]);
      for (int k = 0; k < 2; ++k) {
        Point2 s{0.0, 0.0};
        std::size_t c = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (label[i] != k) continue;
          s[0] += pts[i][0];
          s[1] += pts[i][1];
          ++c;
        }
        if (c) centres[k] = {s[0] / static_cast<double>(c), s[1] / static_cast<double>(c)};
      }
    }

    GmmFit fit;
    bool engaged = false;
    std::array<std::vector<double>, 2> resp{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      resp[0][i] = label[i] == 0;
      resp[1][i] = label[i] == 1;
    }
    auto m_step = [&] {
      for (int k = 0; k < 2; ++k) {
        double s = 0.0;
        for (double v : resp[k]) s += v;
        fit.weights[k] = std::clamp(s / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
        fit.components[k] = detail::weighted_gaussian(pts, resp[k], cfg.eigenvalue_floor, engaged);
      }
      const double total = fit.weights[0] + fit.weights[1];
      fit.weights[0] /= total;
      fit.weights[1] /= total;
    };
    auto e_step = [&] {
      double ll = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double l0 = std::log(fit.weights[0]) + fit.components[0].log_pdf(pts[i]);
        const double l1 = std::log(fit.weights[1]) + fit.components[1].log_pdf(pts[i]);
        const double l = detail::log_sum_exp(l0, l1);
        resp[0][i] = std::exp(l0 - l);
        resp[1][i] = std::exp(l1 - l);
        ll += l;
      }
      return ll;
    };

    m_step();
    double ll = e_step();
    fit.log_likelihood_trace.push_back(ll);
    for (fit.iterations = 1; fit.iterations < cfg.max_iterations; ++fit.iterations) {
      m_step();
      const double next = e_step();
      fit.log_likelihood_trace.push_back(next);
      const double gain = next - ll;
      ll = next;
      if (gain < cfg.tolerance) {
        fit.converged = true;
        break;
      }
    }
    fit.log_likelihood = ll;
    fit.degenerate = engaged;
    fit.posteriors = resp[1];
    if (ll > best.log_likelihood) best = std::move(fit);
  }

  // Canonical order: component 0 follows the majority more often.
  const auto score = [](const Gaussian2& g) { return g.mean[0] + g.mean[1]; };
  if (score(best.components[1]) > score(best.components[0])) {
    std::swap(best.components[0], best.components[1]);
    std::swap(best.weights[0], best.weights[1]);
    for (auto& p : best.posteriors) p = 1.0 - p;
  }
  return best;
}

struct HomogeneityTest {
  double statistic = 0.0;
  double df = 6.0;
  double p_value = 1.0;
  double log_likelihood_single = 0.0;
  double log_likelihood_mixture = 0.0;
};

/// Likelihood-ratio test of one Gaussian against the two-component mixture.
/// df = 11 - 5 = 6 mixture minus single-Gaussian parameters; the chi-square
/// reference is only approximate because the null sits on the boundary of
/// the mixture parameter space.
inline HomogeneityTest homogeneity_test(double ll_single, double ll_mixture, double df = 6.0) {
  double stat = 2.0 * (ll_mixture - ll_single);
  if (stat < -1e-6) throw NumericalError("homogeneity test: mixture fit worse than a single Gaussian");
  stat = std::max(stat, 0.0);
  return {stat, df, stats::chi_square_survival(stat, df), ll_single, ll_mixture};
}

inline HomogeneityTest homogeneity_wilks(const std::vector<Point2>& pts, const GmmConfig& cfg = {}) {
  const auto fit = fit_gmm2(pts, cfg);
  return homogeneity_test(single_gaussian_log_likelihood(pts, cfg.eigenvalue_floor), fit.log_likelihood);
}

/// Parametric-bootstrap p-value of the same statistic: samples of the same
/// size are drawn from the fitted single Gaussian and refitted.
inline double homogeneity_bootstrap_p_value(const std::vector<Point2>& pts, std::size_t n_boot,
                                            const GmmConfig& cfg = {}) {
  if (n_boot == 0) throw DomainError("homogeneity bootstrap: n_boot must be positive");
  const double observed = homogeneity_wilks(pts, cfg).statistic;
  bool engaged = false;
  const auto g = detail::weighted_gaussian(pts, std::vector<double>(pts.size(), 1.0), cfg.eigenvalue_floor, engaged);
  // Cholesky factor of the fitted covariance.
  const double l11 = std::sqrt(g.cov.xx), l21 = g.cov.xy / l11;
  const double l22 = std::sqrt(std::max(g.cov.yy - l21 * l21, 0.0));
  std::size_t exceed = 0;
  for (std::size_t b = 0; b < n_boot; ++b) {
    Rng rng(cfg.seed, {0xb007, b});
    std::vector<Point2> sample(pts.size());
    for (auto& p : sample) {
      const double z1 = rng.normal(), z2 = rng.normal();
      p = {g.mean[0] + l11 * z1, g.mean[1] + l21 * z1 + l22 * z2};
    }
    GmmConfig inner = cfg;
    inner.seed = derive_seed(cfg.seed, {0xb007, b, 1});
    exceed += homogeneity_wilks(sample, inner).statistic >= observed;
  }
  return static_cast<double>(exceed + 1) / static_cast<double>(n_boot + 1);
}

enum class Group { Majoritarian, Contrarian };

struct Classification {
  std::vector<Group> labels;
  double majoritarian_share = 0.0;  // estimate of F
  std::vector<std::size_t> ties;    // posterior exactly 0.5, labelled Majoritarian
};

inline Classification classify_subjects(const GmmFit& fit) {
  Classification out;
  std::size_t major = 0;
  for (std::size_t i = 0; i < fit.posteriors.size(); ++i) {
    const double contrarian = fit.posteriors[i];
    if (contrarian == 0.5) out.ties.push_back(i);
    const Group g = contrarian <= 0.5 ? Group::Majoritarian : Group::Contrarian;
    major += g == Group::Majoritarian;
    out.labels.push_back(g);
  }
  out.majoritarian_share =
      fit.posteriors.empty() ? 0.0 : static_cast<double>(major) / static_cast<double>(fit.posteriors.size());
  return out;
}

}  // namespace qdtcal::shift
