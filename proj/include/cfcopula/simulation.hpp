#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "association.hpp"
#include "bootstrap.hpp"
#include "copula.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "normal.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sample.hpp"

namespace cfcopula {

// Design:  Y1 = 3 + 2X - e1,  Y2 = 1 + 3X + 2 e2,  X* = 0.5 X,
// (X, e1, e2) trivariate normal, unit variances, corr(e1, e2) = 0.5.
// corr(Y1, Y2) = 5/sqrt(65), corr(Y1*, Y2*) = 0.5/sqrt(12.5).
inline const double actual_correlation = std::sqrt(65.0) / 13.0;
inline const double counterfactual_correlation = std::sqrt(2.0) / 10.0;

struct SimDraw {
  ObservationSample sample;
  std::vector<double> y1star;  // latent counterfactual outcomes
  std::vector<double> y2star;
};

inline SimDraw dgp_draw(std::size_t n, Engine& rng) {
  if (n < 2) throw UsageError("simulation draws need n >= 2");
  std::normal_distribution<double> z;
  SimDraw d;
  auto& s = d.sample;
  s.y1.resize(n);
  s.y2.resize(n);
  s.x.resize(n);
  s.xstar.resize(n);
  s.discrete = {false};
  s.x_names = {"x"};
  d.y1star.resize(n);
  d.y2star.resize(n);
  const double c = std::sqrt(0.75);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = z(rng);
    const double z1 = z(rng);
    const double z2 = z(rng);
    const double e1 = z1;
    const double e2 = 0.5 * z1 + c * z2;
    const double xs = 0.5 * x;
    s.x[i] = x;
    s.xstar[i] = xs;
    s.y1[i] = 3.0 + 2.0 * x - e1;
    s.y2[i] = 1.0 + 3.0 * x + 2.0 * e2;
    d.y1star[i] = 3.0 + 2.0 * xs - e1;
    d.y2star[i] = 1.0 + 3.0 * xs + 2.0 * e2;
  }
  return d;
}

/// Gaussian copula Phi_r(Phi^-1(u), Phi^-1(v)) on the m-grid. Boundary rows
/// and columns are set from the copula margins exactly.
inline CopulaGrid gaussian_copula_grid(double r, std::size_t m) {
  if (!(std::abs(r) < 1.0)) throw UsageError("Gaussian copula needs |r| < 1, got " + std::to_string(r));
  if (m < 1) throw UsageError("grid resolution must be >= 1");
  CopulaGrid g(m);
  std::vector<double> q(m + 1);
  for (std::size_t k = 0; k <= m; ++k) q[k] = normal_quantile(g.node(k));
  for (std::size_t i = 0; i <= m; ++i)
    for (std::size_t j = 0; j <= m; ++j) {
      if (i == 0 || j == 0) g.at(i, j) = 0.0;
      else if (i == m) g.at(i, j) = g.node(j);
      else if (j == m) g.at(i, j) = g.node(i);
      else if (j < i) g.at(i, j) = g.at(j, i);  // exchangeable
      else g.at(i, j) = bivariate_normal_cdf(q[i], q[j], r);
    }
  return g;
}

/// Empirical copula of the latent counterfactual outcomes.
inline CopulaGrid oracle_estimator(const std::vector<double>& y1star, const std::vector<double>& y2star,
                                   std::size_t m) {
  if (y1star.empty() || y1star.size() != y2star.size())
    throw DataError("oracle estimator needs latent counterfactual outcomes");
  return empirical_copula(y1star, y2star, m);
}

/// Node-averaged absolute and squared error of an estimated grid.
struct GridError {
  double absolute = 0.0;
  double squared = 0.0;
};

inline GridError grid_error(const CopulaGrid& estimate, const CopulaGrid& truth) {
  if (estimate.m != truth.m) throw UsageError("grid resolutions differ");
  GridError e;
  for (std::size_t c = 0; c < truth.values.size(); ++c) {
    const double d = estimate.values[c] - truth.values[c];
    e.absolute += std::abs(d);
    e.squared += d * d;
  }
  const auto nodes = static_cast<double>(truth.values.size());
  e.absolute /= nodes;
  e.squared /= nodes;
  return e;
}

/// Integrated absolute error of one estimate (average over replicates for MIAE).
inline double miae(const CopulaGrid& estimate, const CopulaGrid& truth) {
  return grid_error(estimate, truth).absolute;
}

/// sqrt of the mean integrated squared error across replicates.
inline double rmise(const std::vector<double>& squared_errors) {
  if (squared_errors.empty()) return 0.0;
  double s = 0.0;
  for (double v : squared_errors) s += v;
  return std::sqrt(s / static_cast<double>(squared_errors.size()));
}

struct SimStudyConfig {
  std::vector<std::size_t> sizes{100, 200, 400};
  std::size_t replications = 1000;
  std::size_t bootstrap = 0;  // 0 skips the coverage part
  double level = 0.95;
  std::size_t m = 100;
  BandwidthRule bandwidth_rule{};
  KernelSpec kernel{};
  bool recompute_weights = false;
  std::uint64_t seed = 20240101;
  unsigned threads = 0;

  void validate() const {
    if (replications < 1) throw UsageError("need at least one replication");
    if (sizes.empty()) throw UsageError("need at least one sample size");
    for (auto n : sizes)
      if (n < 2) throw UsageError("sample sizes must be >= 2");
    if (m % 2 != 0) throw UsageError("grid resolution must be even");
    if (bootstrap == 1) throw UsageError("bootstrap replicate count must be 0 or >= 2");
  }
};

struct SimRow {
  std::size_t n = 0;
  std::string target;
  std::string metric;
  double value = 0.0;
};

/// Flat (n, target, metric, value) table. Copula targets: empirical,
/// proposed, oracle with MIAE / RMISE (x100). Measure targets:
/// "<kind>/<measure>" with MAE, RMSE and, when bootstrapping, CR.
struct SimReport {
  std::vector<SimRow> rows;

  double value(std::size_t n, const std::string& target, const std::string& metric) const {
    for (const auto& r : rows)
      if (r.n == n && r.target == target && r.metric == metric) return r.value;
    throw UsageError("no simulation result for n=" + std::to_string(n) + " " + target + " " + metric);
  }
};

namespace detail {

struct RepResult {
  std::array<GridError, 3> grid{};  // empirical, proposed, oracle
  std::array<double, target_count> estimate{};
  std::array<bool, target_count> covered{};
};

}  // namespace detail

/// Truth per target from the closed forms at the two correlations.
inline std::array<double, target_count> simulation_truth() {
  std::array<double, target_count> t{};
  for (Measure m : all_measures) {
    const double a = gaussian_measure(actual_correlation, m);
    const double c = gaussian_measure(counterfactual_correlation, m);
    t[target_index(TargetKind::actual, m)] = a;
    t[target_index(TargetKind::counterfactual, m)] = c;
    t[target_index(TargetKind::effect, m)] = c - a;
  }
  return t;
}

/// Full factorial over sizes x replications. Replication r at size n draws
/// from the stream (seed, n, r); its bootstrap uses (seed, n, r, 1).
inline SimReport run_study(const SimStudyConfig& cfg) {
  cfg.validate();
  const CopulaGrid truth_actual = gaussian_copula_grid(actual_correlation, cfg.m);
  const CopulaGrid truth_cf = gaussian_copula_grid(counterfactual_correlation, cfg.m);
  const auto truth = simulation_truth();
  SimReport report;

  for (std::size_t n : cfg.sizes) {
    std::vector<detail::RepResult> reps(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
      Engine rng = make_engine(cfg.seed, {n, r});
      SimDraw d = dgp_draw(n, rng);
      BootstrapProblem p;
      p.sample = &d.sample;
      p.kernel = cfg.kernel;
      p.m = cfg.m;
      p.bandwidths = coordinate_bandwidths(d.sample, cfg.bandwidth_rule);
      p.weights = counterfactual_weights(d.sample, p.kernel, p.bandwidths);

      auto& out = reps[r];
      Estimate e = estimate(d.sample, p.weights, cfg.m);
      out.grid[0] = grid_error(e.actual, truth_actual);
      out.grid[1] = grid_error(e.counterfactual, truth_cf);
      out.grid[2] = grid_error(oracle_estimator(d.y1star, d.y2star, cfg.m), truth_cf);
      out.estimate = target_values(e);
      if (cfg.bootstrap >= 2) {
        BootstrapConfig bc;
        bc.replicates = cfg.bootstrap;
        bc.level = cfg.level;
        bc.seed = derive_seed(cfg.seed, {n, r, 1});
        bc.recompute_weights = cfg.recompute_weights;
        bc.threads = 1;
        BootstrapRun run = run_bootstrap(p, bc);
        for (std::size_t t = 0; t < target_count; ++t) out.covered[t] = run.intervals[t].covers(truth[t]);
      }
    });

    const auto R = static_cast<double>(cfg.replications);
    static const std::array<const char*, 3> names{"empirical", "proposed", "oracle"};
    for (std::size_t k = 0; k < 3; ++k) {
      double abs_sum = 0.0;
      std::vector<double> sq(cfg.replications);
      for (std::size_t r = 0; r < cfg.replications; ++r) {
        abs_sum += reps[r].grid[k].absolute;
        sq[r] = reps[r].grid[k].squared;
      }
      report.rows.push_back({n, names[k], "MIAE", 100.0 * abs_sum / R});
      report.rows.push_back({n, names[k], "RMISE", 100.0 * rmise(sq)});
    }
    for (TargetKind kind : {TargetKind::actual, TargetKind::counterfactual, TargetKind::effect})
      for (Measure m : all_measures) {
        const std::size_t t = target_index(kind, m);
        double mae = 0.0, mse = 0.0, cover = 0.0;
        for (const auto& rr : reps) {
          const double d = rr.estimate[t] - truth[t];
          mae += std::abs(d);
          mse += d * d;
          cover += rr.covered[t] ? 1.0 : 0.0;
        }
        const std::string target = std::string(target_kind_name(kind)) + "/" + std::string(measure_name(m));
        report.rows.push_back({n, target, "MAE", mae / R});
        report.rows.push_back({n, target, "RMSE", std::sqrt(mse / R)});
        if (cfg.bootstrap >= 2) report.rows.push_back({n, target, "CR", cover / R});
      }
  }
  return report;
}

}  // namespace cfcopula
