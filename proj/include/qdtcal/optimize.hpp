#pragma once

// Derivative-free minimization: bounded Nelder-Mead simplex, an iterated tabu
// search over a coarse grid to pick starting points, and a driver that runs
// the simplex from every tabu candidate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "qdtcal/error.hpp"
#include "qdtcal/parallel.hpp"
#include "qdtcal/rng.hpp"

namespace qdtcal::opt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bound {
  double lower = -kInf;
  double upper = kInf;
  bool lower_open = false;
  bool upper_open = false;

  bool contains(double x) const {
    if (std::isnan(x)) return false;
    const bool lo = lower_open ? x > lower : x >= lower;
    const bool hi = upper_open ? x < upper : x <= upper;
    return lo && hi;
  }
  bool finite() const { return std::isfinite(lower) && std::isfinite(upper); }
  double width() const { return upper - lower; }
};

/// Scalar loss over a box. Points outside the box, and non-finite values of
/// the user function, evaluate to +infinity.
struct Objective {
  std::size_t dimension = 0;
  std::function<double(std::span<const double>)> evaluate;
  std::vector<Bound> bounds;

  bool in_bounds(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i < bounds.size() && !bounds[i].contains(x[i])) return false;
    }
    return true;
  }

  double operator()(std::span<const double> x) const {
    if (!in_bounds(x)) return kInf;
    const double v = evaluate(x);
    return std::isnan(v) ? kInf : v;
  }
};

struct SimplexConfig {
  double x_tolerance = 1e-6;
  double f_tolerance = 1e-9;
  std::size_t max_evaluations = 20000;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  /// Initial edge length as a fraction of the bound width (or of |x| for
  /// unbounded coordinates).
  double initial_step = 0.05;

  void validate() const {
    if (!(reflection > 0.0) || !(expansion > 1.0) || !(contraction > 0.0 && contraction < 1.0) ||
        !(shrink > 0.0 && shrink < 1.0) || !(initial_step > 0.0) || max_evaluations == 0) {
      throw DomainError("SimplexConfig: invalid coefficients");
    }
  }
};

struct TabuConfig {
  std::size_t restarts = 50;
  double neighborhood_radius = 0.1;  // kick size between restarts, fraction of bound width
  std::size_t tabu_tenure = 10;
  std::size_t grid_resolution = 8;
  std::size_t moves_per_restart = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (restarts == 0 || tabu_tenure == 0 || grid_resolution == 0 || moves_per_restart == 0 ||
        !(neighborhood_radius > 0.0)) {
      throw DomainError("TabuConfig: counts must be positive");
    }
  }
};

struct RestartRecord {
  std::vector<double> start;
  double start_value = kInf;
  double end_value = kInf;
  double best_so_far = kInf;
  bool converged = false;
};

struct OptimResult {
  std::vector<double> best_point;
  double best_value = kInf;
  std::size_t evaluations = 0;
  bool converged = false;
  std::vector<RestartRecord> restart_trace;
};

/// Nelder-Mead simplex with the standard coefficient set. Stops when both the
/// spread of vertex values and the largest vertex offset from the best vertex
/// fall below tolerance, or when the evaluation budget is exhausted (then
/// returns the best point so far with converged = false).
inline OptimResult nelder_mead(const Objective& obj, std::vector<double> start,
                               const SimplexConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = start.size();
  if (n == 0 || (obj.dimension && obj.dimension != n)) throw DomainError("nelder_mead: bad dimension");
  if (!obj.in_bounds(start)) throw DomainError("nelder_mead: start outside bounds");

  std::size_t evals = 0;
  auto f = [&](const std::vector<double>& x) {
    ++evals;
    return obj(x);
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) {
    const bool bounded = i < obj.bounds.size() && obj.bounds[i].finite();
    double step = bounded ? cfg.initial_step * obj.bounds[i].width()
                          : (start[i] != 0.0 ? cfg.initial_step * std::abs(start[i]) : 0.00025);
    simplex[i + 1][i] = start[i] + step;
    if (!obj.in_bounds(simplex[i + 1])) simplex[i + 1][i] = start[i] - step;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[order[i]]);
      v[i] = values[order[i]];
    }
    simplex = std::move(s);
    values = std::move(v);
  };
  auto converged = [&] {
    double fspread = 0.0, xspread = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      fspread = std::max(fspread, std::abs(values[i] - values[0]));
      for (std::size_t k = 0; k < n; ++k) {
        xspread = std::max(xspread, std::abs(simplex[i][k] - simplex[0][k]));
      }
    }
    return std::isfinite(values[0]) && fspread <= cfg.f_tolerance && xspread <= cfg.x_tolerance;
  };
  auto along = [&](const std::vector<double>& centroid, const std::vector<double>& worst, double t) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + t * (centroid[k] - worst[k]);
    return x;
  };

  sort_simplex();
  bool done = converged();
  while (!done && evals < cfg.max_evaluations) {
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    }
    const auto& worst = simplex[n];
    auto xr = along(centroid, worst, cfg.reflection);
    const double fr = f(xr);
    bool shrink = false;
    if (fr < values[0]) {
      auto xe = along(centroid, worst, cfg.reflection * cfg.expansion);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[n] = std::move(xe);
        values[n] = fe;
      } else {
        simplex[n] = std::move(xr);
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = std::move(xr);
      values[n] = fr;
    } else if (fr < values[n]) {
      auto xc = along(centroid, worst, cfg.reflection * cfg.contraction);
      const double fc = f(xc);
      if (fc <= fr) {
        simplex[n] = std::move(xc);
        values[n] = fc;
      } else {
        shrink = true;
      }
    } else {
      auto xcc = along(centroid, worst, -cfg.contraction);
      const double fcc = f(xcc);
      if (fcc < values[n]) {
        simplex[n] = std::move(xcc);
        values[n] = fcc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          simplex[i][k] = simplex[0][k] + cfg.shrink * (simplex[i][k] - simplex[0][k]);
        }
        values[i] = f(simplex[i]);
      }
    }
    sort_simplex();
    done = converged();
  }

  OptimResult out;
  out.best_point = simplex[0];
  out.best_value = values[0];
  out.evaluations = evals;
  out.converged = done;
  out.restart_trace.push_back({std::move(start), kInf, values[0], values[0], done});
  return out;
}

struct Candidate {
  std::vector<double> point;
  double value = kInf;
};

struct TabuResult {
  std::vector<Candidate> candidates;  // ranked by value, then discovery order
  std::size_t evaluations = 0;
};

/// Iterated tabu search over a grid of cell centres. Each restart walks for
/// `moves_per_restart` steps to the best non-tabu axis neighbour (moving
/// uphill if needed); visited cells stay tabu for `tabu_tenure` moves unless
/// they would improve the global best. Even restarts begin in a random cell,
/// odd restarts from a random kick of the best cell found so far. The best
/// cell of every restart becomes a candidate start.
inline TabuResult iterated_tabu_search(const Objective& obj, const TabuConfig& cfg) {
  cfg.validate();
  const std::size_t n = obj.bounds.size();
  if (n == 0 || (obj.dimension && obj.dimension != n)) {
    throw DomainError("iterated_tabu_search: objective needs one bound per dimension");
  }
  for (const auto& b : obj.bounds) {
    if (!b.finite()) throw DomainError("iterated_tabu_search: bounds must be finite");
  }
  using Cell = std::vector<std::int64_t>;
  const auto res = static_cast<std::int64_t>(cfg.grid_resolution);
  Rng rng(cfg.seed, {0x7ab0});

  std::map<Cell, double> cache;
  std::size_t evals = 0;
  auto point_of = [&](const Cell& c) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = obj.bounds[i].lower +
             (static_cast<double>(c[i]) + 0.5) * obj.bounds[i].width() / static_cast<double>(res);
    }
    return x;
  };
  auto value_of = [&](const Cell& c) {
    auto [it, inserted] = cache.try_emplace(c, 0.0);
    if (inserted) {
      ++evals;
      it->second = obj(point_of(c));
    }
    return it->second;
  };

  std::map<Cell, std::size_t> tabu_until;
  std::size_t iteration = 0;
  Cell global_best;
  double global_best_value = kInf;
  std::vector<std::pair<Cell, double>> restart_bests;
  const auto kick = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(cfg.neighborhood_radius * static_cast<double>(res))));

  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Cell current(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (r % 2 == 0 || global_best.empty()) {
        current[i] = static_cast<std::int64_t>(rng.below(cfg.grid_resolution));
      } else {
        const auto offset = static_cast<std::int64_t>(rng.below(2 * kick + 1)) - kick;
        current[i] = std::clamp<std::int64_t>(global_best[i] + offset, 0, res - 1);
      }
    }
    Cell best = current;
    double best_value = value_of(current);
    if (best_value < global_best_value || global_best.empty()) {
      global_best = current;
      global_best_value = best_value;
    }
    tabu_until[current] = iteration + cfg.tabu_tenure;

    for (std::size_t m = 0; m < cfg.moves_per_restart; ++m) {
      Cell chosen;
      double chosen_value = kInf;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::int64_t d : {-1, 1}) {
          Cell next = current;
          next[i] += d;
          if (next[i] < 0 || next[i] >= res) continue;
          const double v = value_of(next);
          const auto t = tabu_until.find(next);
          const bool is_tabu = t != tabu_until.end() && t->second > iteration;
          if (is_tabu && !(v < global_best_value)) continue;
          if (chosen.empty() || v < chosen_value) {
            chosen = std::move(next);
            chosen_value = v;
          }
        }
      }
      if (chosen.empty()) break;
      ++iteration;
      current = std::move(chosen);
      tabu_until[current] = iteration + cfg.tabu_tenure;
      if (chosen_value < best_value) {
        best = current;
        best_value = chosen_value;
      }
      if (chosen_value < global_best_value) {
        global_best = current;
        global_best_value = chosen_value;
      }
    }
    restart_bests.emplace_back(std::move(best), best_value);
  }

  std::vector<std::size_t> idx(restart_bests.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
    return restart_bests[l].second < restart_bests[r].second;
  });
  TabuResult out;
  out.evaluations = evals;
  std::vector<Cell> seen;
  for (std::size_t i : idx) {
    const auto& [cell, v] = restart_bests[i];
    if (std::find(seen.begin(), seen.end(), cell) != seen.end()) continue;
    seen.push_back(cell);
    out.candidates.push_back({point_of(cell), v});
  }
  return out;
}

/// Runs Nelder-Mead from every explicit start and every tabu candidate and
/// keeps the best end point (ties broken by restart index). Restarts run on
/// up to `threads` workers; the result does not depend on the thread count.
inline OptimResult global_minimize(const Objective& obj, const TabuConfig& tabu,
                                   const SimplexConfig& simplex,
                                   const std::vector<std::vector<double>>& extra_starts = {},
                                   unsigned threads = 1) {
  const auto search = iterated_tabu_search(obj, tabu);
  std::vector<std::vector<double>> starts;
  for (const auto& s : extra_starts) {
    if (obj.in_bounds(s)) starts.push_back(s);
  }
  for (const auto& c : search.candidates) {
    if (std::isfinite(c.value)) starts.push_back(c.point);
  }
  if (starts.empty()) throw NumericalError("global_minimize: no finite starting point");

  std::vector<OptimResult> runs(starts.size());
  parallel_for(starts.size(), threads, [&](std::size_t i) { runs[i] = nelder_mead(obj, starts[i], simplex); });

  OptimResult out;
  out.evaluations = search.evaluations;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto& run = runs[i];
    out.evaluations += run.evaluations;
    if (run.best_value < out.best_value || out.best_point.empty()) {
      out.best_value = run.best_value;
      out.best_point = run.best_point;
      out.converged = run.converged;
    }
    auto record = std::move(run.restart_trace.front());
    record.start_value = obj(starts[i]);
    record.best_so_far = out.best_value;
    out.restart_trace.push_back(std::move(record));
  }
  return out;
}

}  // namespace qdtcal::opt
