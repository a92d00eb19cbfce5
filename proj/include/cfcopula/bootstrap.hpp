#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "association.hpp"
#include "copula.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sample.hpp"

namespace cfcopula {

/// Actual and counterfactual copulas plus their association measures.
struct Estimate {
  CopulaGrid actual;
  CopulaGrid counterfactual;
  AssociationReport actual_report;
  AssociationReport counterfactual_report;
  MeasureSet effect{};
};

inline Estimate estimate_from_grids(CopulaGrid actual, CopulaGrid counterfactual) {
  Estimate e;
  e.actual = std::move(actual);
  e.counterfactual = std::move(counterfactual);
  e.actual_report = measures_from_grid(e.actual);
  e.counterfactual_report = measures_from_grid(e.counterfactual);
  e.effect = policy_effect(e.counterfactual_report, e.actual_report);
  return e;
}

/// Point estimates from precomputed counterfactual weights.
inline Estimate estimate(const ObservationSample& s, const WeightVector& w, std::size_t m,
                         const CopulaOptions& opt = {}) {
  return estimate_from_grids(empirical_copula(s.y1, s.y2, m, opt.variant), counterfactual_copula(s, w, m, opt));
}

/// Statistic kinds crossed with the four measures give twelve targets.
enum class TargetKind { actual, counterfactual, effect };

inline constexpr std::size_t target_count = 12;

inline constexpr std::size_t target_index(TargetKind k, Measure m) {
  return static_cast<std::size_t>(k) * 4 + index_of(m);
}

inline constexpr const char* target_kind_name(TargetKind k) {
  switch (k) {
    case TargetKind::actual: return "actual";
    case TargetKind::counterfactual: return "counterfactual";
    case TargetKind::effect: return "effect";
  }
  return "?";
}

inline std::array<double, target_count> target_values(const Estimate& e) {
  std::array<double, target_count> v{};
  for (Measure m : all_measures) {
    v[target_index(TargetKind::actual, m)] = e.actual_report[m];
    v[target_index(TargetKind::counterfactual, m)] = e.counterfactual_report[m];
    v[target_index(TargetKind::effect, m)] = e.effect[index_of(m)];
  }
  return v;
}

struct BootstrapConfig {
  std::size_t replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  bool recompute_weights = false;
  bool keep_grids = false;  // needed for sup_band
  unsigned threads = 0;     // 0: all hardware threads
  std::size_t max_redraws = 10;

  void validate() const {
    if (replicates < 2) throw UsageError("bootstrap needs B >= 2");
    if (!(level > 0.0 && level < 1.0)) throw UsageError("coverage level must lie in (0,1)");
  }
};

/// Multinomial(n; 1/n, ..., 1/n) counts: n uniform draws of a row index.
inline std::vector<double> multinomial_counts(std::size_t n, Engine& rng) {
  if (n == 0) throw UsageError("multinomial counts need n >= 1");
  std::vector<double> counts(n, 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t k = 0; k < n; ++k) counts[pick(rng)] += 1.0;
  return counts;
}

/// Everything a replicate needs besides its counts.
struct BootstrapProblem {
  const ObservationSample* sample = nullptr;
  WeightVector weights;  // original W, reused unless recompute_weights
  KernelSpec kernel;
  std::vector<double> bandwidths;
  std::size_t m = 100;
  CopulaOptions options;
};

struct Replicate {
  bool degenerate = false;
  Estimate estimate;
};

/// One bootstrap replicate. Counts M multiply into both the outer sums and
/// the marginal CDFs:
///   actual:         weights M_i
///   counterfactual: weights M_i W_i   (W recomputed from M when requested)
/// Each estimator is normalized by its own total mass so replicate grids are
/// proper copula grids.
inline Replicate bootstrap_replicate(const BootstrapProblem& p, std::span<const double> counts,
                                     bool recompute_weights = false) {
  const ObservationSample& s = *p.sample;
  const std::size_t n = s.size();
  if (counts.size() != n) throw UsageError("bootstrap counts must have length n");
  Replicate r;
  const auto support = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; });
  if (support < 2) {
    r.degenerate = true;
    return r;
  }
  WeightVector w = recompute_weights ? counterfactual_weights(s, p.kernel, p.bandwidths, counts) : p.weights;
  std::vector<double> effective(n);
  double total = 0.0;
  bool negative = false;
  for (std::size_t i = 0; i < n; ++i) {
    effective[i] = counts[i] * w.w[i];
    total += effective[i];
    negative = negative || effective[i] < 0.0;
  }
  if (!(total > 0.0)) {
    r.degenerate = true;
    return r;
  }
  CopulaGrid actual = weighted_copula(s.y1, s.y2, counts, p.m, {p.options.variant, false});
  CopulaGrid cf = weighted_copula(s.y1, s.y2, effective, p.m, p.options);
  cf.two_increasing = !negative;
  r.estimate = estimate_from_grids(std::move(actual), std::move(cf));
  return r;
}

/// (1-alpha) quantile of |sqrt(n)(theta_b - theta) - mean_b'(...)| using the
/// order statistic at index ceil(level * B), no interpolation.
inline double centered_quantile(std::span<const double> replicates, double point, std::size_t n, double level) {
  const std::size_t B = replicates.size();
  if (B < 2) throw UsageError("centered quantile needs B >= 2");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0,1)");
  const double rn = std::sqrt(static_cast<double>(n));
  std::vector<double> dev(B);
  double mean = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    dev[b] = rn * (replicates[b] - point);
    mean += dev[b];
  }
  mean /= static_cast<double>(B);
  for (double& d : dev) d = std::abs(d - mean);
  std::sort(dev.begin(), dev.end());
  // 1e-9 guards level*B landing a rounding error above an integer.
  auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(B) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, B);
  return dev[k - 1];
}

struct TargetInterval {
  double point = 0.0;
  double quantile = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  bool covers(double truth) const { return lo <= truth && truth <= hi; }
};

inline TargetInterval symmetric_interval(std::span<const double> replicates, double point, std::size_t n,
                                         double level) {
  TargetInterval t;
  t.point = point;
  t.quantile = centered_quantile(replicates, point, n, level);
  const double half = t.quantile / std::sqrt(static_cast<double>(n));
  t.lo = point - half;
  t.hi = point + half;
  return t;
}

struct BootstrapRun {
  std::size_t n = 0;
  std::size_t replicates = 0;
  double level = 0.95;
  Estimate point;
  std::array<std::vector<double>, target_count> statistics;  // [target][b]
  std::array<TargetInterval, target_count> intervals;
  std::size_t discarded = 0;
  std::vector<std::string> diagnostics;
  std::vector<CopulaGrid> actual_grids;  // filled when keep_grids
  std::vector<CopulaGrid> counterfactual_grids;

  const TargetInterval& interval(TargetKind k, Measure m) const { return intervals[target_index(k, m)]; }
};

/// B replicates with per-replicate RNG streams derived from (seed, b), so
/// results do not depend on thread count. A degenerate draw (fewer than two
/// distinct rows, or no positive counterfactual mass) is redrawn from the
/// same stream, at most max_redraws times.
inline BootstrapRun run_bootstrap(const BootstrapProblem& p, const BootstrapConfig& cfg) {
  cfg.validate();
  const ObservationSample& s = *p.sample;
  const std::size_t n = s.size();
  const std::size_t B = cfg.replicates;

  BootstrapRun run;
  run.n = n;
  run.replicates = B;
  run.level = cfg.level;
  run.point = estimate(s, p.weights, p.m, p.options);
  const auto point = target_values(run.point);

  std::vector<std::array<double, target_count>> stats(B);
  std::vector<std::size_t> redraws(B, 0);
  if (cfg.keep_grids) {
    run.actual_grids.resize(B);
    run.counterfactual_grids.resize(B);
  }
  parallel_for(B, cfg.threads, [&](std::size_t b) {
    Engine rng = make_engine(cfg.seed, {b});
    for (std::size_t attempt = 0;; ++attempt) {
      auto counts = multinomial_counts(n, rng);
      Replicate r = bootstrap_replicate(p, counts, cfg.recompute_weights);
      if (!r.degenerate) {
        stats[b] = target_values(r.estimate);
        if (cfg.keep_grids) {
          run.actual_grids[b] = std::move(r.estimate.actual);
          run.counterfactual_grids[b] = std::move(r.estimate.counterfactual);
        }
        redraws[b] = attempt;
        return;
      }
      if (attempt >= cfg.max_redraws)
        throw NumericError("bootstrap replicate " + std::to_string(b) + " stayed degenerate after " +
                           std::to_string(cfg.max_redraws) + " redraws");
    }
  });

  for (std::size_t b = 0; b < B; ++b) run.discarded += redraws[b];
  for (std::size_t t = 0; t < target_count; ++t) {
    run.statistics[t].resize(B);
    for (std::size_t b = 0; b < B; ++b) run.statistics[t][b] = stats[b][t];
    run.intervals[t] = symmetric_interval(run.statistics[t], point[t], n, cfg.level);
  }
  if (B < 20)
    run.diagnostics.push_back("only " + std::to_string(B) + " replicates; interval widths are unreliable");
  for (std::size_t t = 0; t < target_count; ++t)
    if (run.intervals[t].quantile == 0.0) {
      run.diagnostics.push_back("zero-width interval for target " + std::to_string(t));
    }
  if (run.discarded > 0) run.diagnostics.push_back(std::to_string(run.discarded) + " degenerate draws redrawn");
  return run;
}

/// Uniform confidence band around a point grid.
struct ConfidenceBand {
  double quantile = 0.0;    // Q_band
  double half_width = 0.0;  // Q_band / sqrt(n)
  CopulaGrid lower;
  CopulaGrid upper;
};

/// Q_band is the (1-alpha) quantile of the sup-norm of centered grid
/// deviations sqrt(n)(G_b - G) - mean_b'; the band is G +/- Q_band/sqrt(n)
/// clipped to [0,1].
inline ConfidenceBand sup_band(std::span<const CopulaGrid> replicates, const CopulaGrid& point, std::size_t n,
                               double level) {
  const std::size_t B = replicates.size();
  if (B < 2) throw UsageError("confidence band needs B >= 2");
  const std::size_t cells = point.values.size();
  for (const auto& g : replicates)
    if (g.m != point.m) throw UsageError("replicate grids must share the point grid's resolution");
  const double rn = std::sqrt(static_cast<double>(n));
  std::vector<double> mean(cells, 0.0);
  for (const auto& g : replicates)
    for (std::size_t c = 0; c < cells; ++c) mean[c] += rn * (g.values[c] - point.values[c]);
  for (double& v : mean) v /= static_cast<double>(B);
  std::vector<double> sups(B, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < cells; ++c)
      sups[b] = std::max(sups[b], std::abs(rn * (replicates[b].values[c] - point.values[c]) - mean[c]));
  std::sort(sups.begin(), sups.end());
  auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(B) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, B);

  ConfidenceBand band;
  band.quantile = sups[k - 1];
  band.half_width = band.quantile / rn;
  band.lower = point;
  band.upper = point;
  for (std::size_t c = 0; c < cells; ++c) {
    const double v = point.values[c];
    band.lower.values[c] = std::min(v, std::clamp(v - band.half_width, 0.0, 1.0));
    band.upper.values[c] = std::max(v, std::clamp(v + band.half_width, 0.0, 1.0));
  }
  return band;
}

}  // namespace cfcopula
