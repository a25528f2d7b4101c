#pragma once

// Choice shifts between two sessions of the same experiment.
//
// With independent sessions and a subject choosing the majority option with
// probability p, the shift probability is 2p(1-p). The heterogeneous model
// splits the population into a "majoritarian" fraction F that follows the
// majority more strongly, p1 = p + alpha p(1-p), and a "contrarian" rest with
// p2 = p - beta p(1-p). The link beta = alpha F / (1 - F) keeps the aggregate
// majority probability equal to p.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qdtcal/choice_data.hpp"
#include "qdtcal/error.hpp"
#include "qdtcal/optimize.hpp"
#include "qdtcal/parallel.hpp"
#include "qdtcal/rng.hpp"
#include "qdtcal/stats.hpp"

namespace qdtcal::shift {

inline constexpr double kLinkTolerance = 1e-9;

struct HeteroShiftParams {
  double shift_alpha = 0.0;  // majoritarian tilt, [0, 1]
  double shift_beta = 0.0;   // contrarian tilt, [0, 2]
  double F = 0.5;            // majoritarian fraction, (0, 1)

  static HeteroShiftParams from_alpha(double shift_alpha, double F) {
    if (!(F > 0.0 && F < 1.0)) throw DomainError("HeteroShiftParams: F must lie in (0, 1)");
    HeteroShiftParams p{shift_alpha, shift_alpha * F / (1.0 - F), F};
    p.validate();
    return p;
  }

  static HeteroShiftParams from_beta(double shift_beta, double F) {
    if (!(F > 0.0 && F < 1.0)) throw DomainError("HeteroShiftParams: F must lie in (0, 1)");
    HeteroShiftParams p{shift_beta * (1.0 - F) / F, shift_beta, F};
    p.validate();
    return p;
  }

  /// Both tilts given; F follows from the link.
  static HeteroShiftParams from_tilts(double shift_alpha, double shift_beta) {
    if (!(shift_alpha + shift_beta > 0.0)) throw DomainError("HeteroShiftParams: tilts are both zero");
    HeteroShiftParams p{shift_alpha, shift_beta, shift_beta / (shift_alpha + shift_beta)};
    p.validate();
    return p;
  }

  static HeteroShiftParams homogeneous() { return {0.0, 0.0, 0.5}; }

  bool valid() const {
    constexpr double slack = 1e-12;
    return F > 0.0 && F < 1.0 && shift_alpha >= 0.0 && shift_alpha <= 1.0 + slack && shift_beta >= 0.0 &&
           shift_beta <= 2.0 + slack && std::abs(shift_beta - shift_alpha * F / (1.0 - F)) <= kLinkTolerance;
  }

  void validate() const {
    if (!valid()) {
      throw DomainError("HeteroShiftParams: need alpha in [0,1], beta in [0,2], F in (0,1) and "
                        "beta = alpha F / (1 - F)");
    }
  }
};

inline double shift_prob_homogeneous(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("shift_prob_homogeneous: p outside [0, 1]");
  return 2.0 * p * (1.0 - p);
}

struct GroupProbs {
  double majoritarian = 0.0;
  double contrarian = 0.0;
};

inline GroupProbs group_probs(double p, const HeteroShiftParams& params) {
  if (!(p >= 0.5 && p <= 1.0)) throw DomainError("group_probs: p outside [0.5, 1]");
  params.validate();
  const double spread = p * (1.0 - p);
  return {std::clamp(p + params.shift_alpha * spread, 0.0, 1.0),
          std::clamp(p - params.shift_beta * spread, 0.0, 1.0)};
}

/// Shift probability of a population with group probabilities p1, p2 and
/// majoritarian fraction F.
inline double shift_prob_two_group(double p1, double p2, double F) {
  return 2.0 * F * p1 * (1.0 - p1) + 2.0 * (1.0 - F) * p2 * (1.0 - p2);
}

inline double shift_prob_hetero(double p, const HeteroShiftParams& params) {
  const auto g = group_probs(p, params);
  return shift_prob_two_group(g.majoritarian, g.contrarian, params.F);
}

/// Offsets of the two group probabilities from an undecided p = 1/2.
inline GroupProbs equal_group_offsets(const HeteroShiftParams& params) {
  const auto g = group_probs(0.5, params);
  return {g.majoritarian - 0.5, g.contrarian - 0.5};
}

struct ShiftObservation {
  double p = 0.5;      // majority-choice frequency
  double shift = 0.0;  // observed shift frequency
};

/// Per pair: majority frequency at session 1 (or pooled over both sessions)
/// and the shift frequency among subjects seen twice.
inline std::vector<ShiftObservation> shift_observations(const ChoiceDataset& ds, bool pooled = false) {
  std::vector<ShiftObservation> out;
  out.reserve(ds.pair_count());
  for (std::size_t j = 0; j < ds.pair_count(); ++j) {
    double p;
    if (pooled) {
      const auto c1 = ds.counts(j, Session::Time1);
      const auto c2 = ds.counts(j, Session::Time2);
      const auto a = c1.a + c2.a, b = c1.b + c2.b;
      if (a + b == 0) throw InputError("no observations for pair '" + ds.pairs()[j].id + "'");
      p = static_cast<double>(std::max(a, b)) / static_cast<double>(a + b);
    } else {
      p = majority_frequency(ds, j, Session::Time1);
    }
    out.push_back({p, shift_frequency(ds, j)});
  }
  return out;
}

inline double hetero_rss(const std::vector<ShiftObservation>& obs, const HeteroShiftParams& params) {
  double s = 0.0;
  for (const auto& o : obs) {
    const double d = shift_prob_hetero(o.p, params) - o.shift;
    s += d * d;
  }
  return s;
}

struct RssSurface {
  std::vector<double> betas;
  std::vector<double> fractions;
  /// rss[i * fractions.size() + k] at (betas[i], fractions[k]); NaN where the
  /// implied alpha exceeds 1.
  std::vector<double> rss;

  double at(std::size_t beta_index, std::size_t f_index) const {
    return rss[beta_index * fractions.size() + f_index];
  }
};

struct CalibrationConfig {
  std::size_t surface_beta_steps = 41;  // beta in [0, 2]
  std::size_t surface_f_steps = 19;     // F in [0.05, 0.95]
  opt::TabuConfig tabu{.restarts = 6, .moves_per_restart = 10};
  opt::SimplexConfig simplex{.x_tolerance = 1e-8, .f_tolerance = 1e-12};
};

struct HeteroCalibration {
  HeteroShiftParams params;
  double rss = 0.0;
  bool converged = false;
  RssSurface surface;
};

inline RssSurface rss_surface(const std::vector<ShiftObservation>& obs, const CalibrationConfig& cfg = {}) {
  RssSurface s;
  for (std::size_t i = 0; i < cfg.surface_beta_steps; ++i) {
    s.betas.push_back(2.0 * static_cast<double>(i) / static_cast<double>(cfg.surface_beta_steps - 1));
  }
  for (std::size_t k = 0; k < cfg.surface_f_steps; ++k) {
    s.fractions.push_back(0.05 + 0.9 * static_cast<double>(k) / static_cast<double>(cfg.surface_f_steps - 1));
  }
  for (double beta : s.betas) {
    for (double F : s.fractions) {
      const double alpha = beta * (1.0 - F) / F;
      s.rss.push_back(alpha <= 1.0 ? hetero_rss(obs, HeteroShiftParams::from_beta(beta, F)) : std::nan(""));
    }
  }
  return s;
}

/// Least-squares fit of the two-group model to observed shift frequencies.
/// With `fixed_F` (typically the clustered majoritarian share) only beta is
/// free; otherwise (beta, F) are fitted jointly. Either way the RSS surface
/// over a (beta, F) grid is returned for contour reporting.
inline HeteroCalibration calibrate_hetero(const std::vector<ShiftObservation>& obs,
                                          std::optional<double> fixed_F = std::nullopt,
                                          const CalibrationConfig& cfg = {}) {
  if (obs.size() < 2) throw DomainError("calibrate_hetero: need at least two pairs");
  for (const auto& o : obs) {
    if (!(o.p >= 0.5 && o.p <= 1.0) || !(o.shift >= 0.0 && o.shift <= 1.0)) {
      throw DomainError("calibrate_hetero: observation outside its range");
    }
  }
  HeteroCalibration out;
  if (fixed_F) {
    const double F = *fixed_F;
    if (!(F > 0.0 && F < 1.0)) throw DomainError("calibrate_hetero: F must lie in (0, 1)");
    const double beta_max = std::min(2.0, F / (1.0 - F));
    opt::Objective obj{1,
                       [&](std::span<const double> x) {
                         return hetero_rss(obs, HeteroShiftParams::from_beta(x[0], F));
                       },
                       {opt::Bound{0.0, beta_max}}};
    const auto r = opt::global_minimize(obj, cfg.tabu, cfg.simplex);
    out.params = HeteroShiftParams::from_beta(r.best_point[0], F);
    out.rss = r.best_value;
    out.converged = r.converged;
  } else {
    opt::Objective obj{2,
                       [&](std::span<const double> x) {
                         const double beta = x[0], F = x[1];
                         if (beta * (1.0 - F) / F > 1.0) return opt::kInf;
                         return hetero_rss(obs, HeteroShiftParams::from_beta(beta, F));
                       },
                       {opt::Bound{0.0, 2.0}, opt::Bound{0.0, 1.0, true, true}}};
    const auto r = opt::global_minimize(obj, cfg.tabu, cfg.simplex);
    out.params = HeteroShiftParams::from_beta(r.best_point[0], r.best_point[1]);
    out.rss = r.best_value;
    out.converged = r.converged;
  }
  out.surface = rss_surface(obs, cfg);
  return out;
}

struct BandPoint {
  double p = 0.5;
  double predicted_shift = 0.0;
  double low = 0.0;
  double high = 0.0;
};

struct BandConfig {
  std::size_t n_sims = 3000;
  std::size_t n_subjects = 142;
  double low_quantile = 0.05;
  double high_quantile = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Monte Carlo quantile band of the shift fraction for each pair. Every
/// simulation draws two independent sessions for round(F n) majoritarian and
/// n - round(F n) contrarian subjects. Pair j uses its own substream.
inline std::vector<BandPoint> monte_carlo_band(const std::vector<double>& ps, const HeteroShiftParams& params,
                                               const BandConfig& cfg = {}) {
  if (cfg.n_sims == 0 || cfg.n_subjects == 0) throw DomainError("monte_carlo_band: counts must be positive");
  params.validate();
  const auto n_major = static_cast<std::size_t>(std::llround(params.F * static_cast<double>(cfg.n_subjects)));
  std::vector<BandPoint> out(ps.size());
  parallel_for(ps.size(), cfg.threads, [&](std::size_t j) {
    const auto g = group_probs(ps[j], params);
    Rng rng(cfg.seed, {0xba4d, j});
    std::vector<double> fractions(cfg.n_sims);
    for (auto& fraction : fractions) {
      std::size_t shifts = 0;
      for (std::size_t i = 0; i < cfg.n_subjects; ++i) {
        const double q = i < n_major ? g.majoritarian : g.contrarian;
        shifts += rng.bernoulli(q) != rng.bernoulli(q);
      }
      fraction = static_cast<double>(shifts) / static_cast<double>(cfg.n_subjects);
    }
    out[j] = {ps[j], shift_prob_hetero(ps[j], params), stats::quantile(fractions, cfg.low_quantile),
              stats::quantile(fractions, cfg.high_quantile)};
  });
  return out;
}

}  // namespace qdtcal::shift
