// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cfcopula/commands.hpp"

using namespace cfcopula;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(const char* id, const char* title, const Verdict& v) {
  std::printf("%s %s: %s%s\n", v.ok ? "PASS" : "FAIL", id, title, v.detail.str().c_str());
  std::fflush(stdout);
  if (!v.ok) ++failures;
}

bool within_rel(double value, double target, double rel) { return std::abs(value - target) <= rel * target; }

Verdict ac1() {
  Verdict v;
  const auto t0 = Clock::now();
  for (double r : {actual_correlation, counterfactual_correlation}) {
    const auto rep = measures_from_grid(gaussian_copula_grid(r, 100), MeasureMethod::grid_stieltjes);
    for (Measure m : all_measures) {
      const double err = std::abs(rep[m] - gaussian_measure(r, m));
      const double tol = m == Measure::beta ? 1e-6 : 0.01;
      v.check(err <= tol, std::string(measure_name(m)) + " r=" + std::to_string(r) + " err=" + std::to_string(err));
    }
  }
  const double secs = seconds_since(t0);
  v.check(secs < 10.0, "runtime " + std::to_string(secs) + "s");
  v.detail << " time=" << secs << "s";
  return v;
}

Verdict ac2(const SimReport& rep) {
  Verdict v;
  const char* names[] = {"empirical", "proposed", "oracle"};
  const double miae[] = {0.937, 1.526, 1.241};
  const double rmise[] = {1.364, 2.090, 1.674};
  for (int k = 0; k < 3; ++k) {
    const double a = rep.value(100, names[k], "MIAE"), b = rep.value(100, names[k], "RMISE");
    v.detail << ' ' << names[k] << " MIAE=" << a << " RMISE=" << b;
    v.check(within_rel(a, miae[k], 0.15), std::string(names[k]) + " MIAE");
    v.check(within_rel(b, rmise[k], 0.15), std::string(names[k]) + " RMISE");
  }
  return v;
}

Verdict ac3(const SimReport& rep) {
  Verdict v;
  for (const char* name : {"empirical", "proposed"}) {
    const double ratio = rep.value(400, name, "MIAE") / rep.value(100, name, "MIAE");
    v.detail << ' ' << name << " ratio=" << ratio;
    v.check(ratio >= 0.35 && ratio <= 0.65, std::string(name) + " ratio");
  }
  return v;
}

Verdict ac4(const SimReport& rep) {
  Verdict v;
  const double a = rep.value(200, "actual/kendall_tau", "CR");
  const double c = rep.value(100, "counterfactual/kendall_tau", "CR");
  v.detail << " actual tau CR(n=200)=" << a << " counterfactual tau CR(n=100)=" << c;
  v.check(a >= 0.91 && a <= 0.99, "actual coverage");
  v.check(c >= 0.68 && c <= 0.83, "counterfactual coverage");
  return v;
}

bool frechet_ok(const CopulaGrid& g, double tol) {
  for (std::size_t i = 0; i <= g.m; ++i)
    for (std::size_t j = 0; j <= g.m; ++j) {
      const double u = g.node(i), w = g.node(j), c = g.at(i, j);
      if (c < std::max(u + w - 1.0, 0.0) - tol || c > std::min(u, w) + tol) return false;
    }
  return true;
}

bool two_increasing(const CopulaGrid& g) {
  for (std::size_t i = 0; i < g.m; ++i)
    for (std::size_t j = 0; j < g.m; ++j)
      if (g.at(i + 1, j + 1) - g.at(i, j + 1) - g.at(i + 1, j) + g.at(i, j) < -1e-12) return false;
  return true;
}

Verdict ac5() {
  Verdict v;
  const auto t0 = Clock::now();

  // Weight normalization, Fréchet bounds and 2-increasingness over random configurations.
  std::mt19937_64 rng(20240101);
  std::uniform_int_distribution<std::size_t> size(100, 400);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t norm_bad = 0, frechet_bad = 0, incr_bad = 0, evaluated = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = size(rng);
    std::vector<double> x(n), xs(n), y1(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = unif(rng);
      xs[i] = std::clamp(x[i] + 0.2 * (unif(rng) - 0.5), 0.0, 1.0);
      y1[i] = unif(rng) + x[i];
      y2[i] = unif(rng) - y1[i];
    }
    const KernelSpec k = c % 3 == 0 ? KernelSpec(KernelFamily::gaussian_truncated) : c % 3 == 1 ? KernelSpec::epanechnikov() : KernelSpec::higher_order(4);
    const double h = 0.3 + unif(rng);
    WeightVector w;
    try {
      w = counterfactual_weights(x, xs, k, h);
    } catch (const NumericError&) {
      continue;
    }
    ++evaluated;
    if (std::abs(w.sum - static_cast<double>(n)) > 1e-9 * static_cast<double>(n)) ++norm_bad;
    const auto emp = empirical_copula(y1, y2, 100);
    if (!frechet_ok(emp, 0.02 + 1e-9)) ++frechet_bad;
    if (w.negative_count == 0) {
      const auto g = counterfactual_copula(y1, y2, w, 100);
      if (!frechet_ok(g, 0.02 + 1e-9)) ++frechet_bad;
      if (!two_increasing(g)) ++incr_bad;
    }
  }
  v.detail << " configs=" << evaluated;
  v.check(evaluated == 100, "configs without a donor");
  v.check(norm_bad == 0, "weight normalization x" + std::to_string(norm_bad));
  v.check(frechet_bad == 0, "Frechet bounds x" + std::to_string(frechet_bad));
  v.check(incr_bad == 0, "2-increasing x" + std::to_string(incr_bad));

  // counts == 1 reduction.
  Engine e = make_engine(11, {});
  const auto draw = dgp_draw(400, e);
  BootstrapProblem prob;
  prob.sample = &draw.sample;
  prob.kernel = KernelSpec::epanechnikov();
  prob.bandwidths = coordinate_bandwidths(draw.sample, {});
  prob.weights = counterfactual_weights(draw.sample, prob.kernel, prob.bandwidths);
  prob.m = 100;
  const Estimate point = estimate(draw.sample, prob.weights, 100);
  const std::vector<double> ones(400, 1.0);
  for (bool recompute : {false, true}) {
    const Replicate r = bootstrap_replicate(prob, ones, recompute);
    const bool same = r.estimate.counterfactual.values == point.counterfactual.values &&
                      r.estimate.actual.values == point.actual.values &&
                      target_values(r.estimate) == target_values(point);
    v.check(same, std::string("counts==1 reduction, recompute=") + (recompute ? "true" : "false"));
  }

  // Grid (Stieltjes path) vs pseudo-observations at n = 400.
  const auto gs_a = measures_from_grid(point.actual, MeasureMethod::grid_stieltjes);
  const auto gs_c = measures_from_grid(point.counterfactual, MeasureMethod::grid_stieltjes);
  const auto po = measures_from_pseudo_obs(pseudo_observations(draw.sample.y1, draw.sample.y2, prob.weights.w));
  const auto po_a = measures_from_pseudo_obs(pseudo_observations(draw.sample.y1, draw.sample.y2, {}));
  double worst = 0.0;
  for (Measure m : all_measures) {
    worst = std::max(worst, std::abs(gs_c[m] - po[m]));
    worst = std::max(worst, std::abs(gs_a[m] - po_a[m]));
  }
  v.check(worst <= 0.02, "grid vs pseudo-obs " + std::to_string(worst));

  // Seed determinism.
  BootstrapConfig bc;
  bc.replicates = 50;
  bc.seed = 3;
  const auto r1 = run_bootstrap(prob, bc), r2 = run_bootstrap(prob, bc);
  bool det = true;
  for (std::size_t t = 0; t < target_count; ++t)
    det = det && r1.statistics[t] == r2.statistics[t] && r1.intervals[t].lo == r2.intervals[t].lo &&
          r1.intervals[t].hi == r2.intervals[t].hi;
  v.check(det, "seed determinism");

  // Rank invariance under strictly increasing transforms.
  ObservationSample t = draw.sample;
  for (double& y : t.y1) y = std::exp(y) + 3.0;
  for (double& y : t.y2) y = y * y * y + 2.0 * y;
  const Estimate pt = estimate(t, prob.weights, 100);
  const auto pot = measures_from_pseudo_obs(pseudo_observations(t.y1, t.y2, prob.weights.w));
  v.check(target_values(pt) == target_values(point) && pot.values == po.values, "rank invariance");

  const double secs = seconds_since(t0);
  v.check(secs < 60.0, "runtime " + std::to_string(secs) + "s");
  v.detail << " time=" << secs << "s";
  return v;
}

Verdict ac6() {
  Verdict v;
  const auto t0 = Clock::now();
  const fs::path dir = fs::temp_directory_path() / ("cfcopula_acceptance_" + std::to_string(::getpid()));
  std::ostringstream log;

  RunConfig c;
  c.out_dir = dir.string();
  cmd_synth(c, log);
  c.input = (dir / "synthetic_psid.csv").string();
  c.schema.y1 = "pinc";
  c.schema.y2 = "cinc";
  c.schema.x = {"cedu", "pedu"};
  c.boot_b = 200;

  const auto table = read_csv(c.input);
  const auto cedu = numeric_column(table, "cedu"), pedu = numeric_column(table, "pedu");
  v.detail << " n=" << table.rows.size();

  struct Case {
    const char* param;
    const char* range;
    int lo, hi;
  };
  for (const Case& cs : {Case{"s", "13:16", 13, 16}, Case{"s'", "6:17", 6, 17}}) {
    c.param = cs.param;
    c.range = cs.range;
    c.out_dir = (dir / (std::string(cs.param) == "s" ? "s" : "sprime")).string();
    std::vector<SweepRow> rows;
    try {
      rows = cmd_sweep(c, log);
    } catch (const std::exception& ex) {
      v.check(false, std::string(cs.param) + " sweep threw: " + ex.what());
      continue;
    }
    const std::size_t expected = static_cast<std::size_t>(cs.hi - cs.lo + 1) * 12;
    v.check(rows.size() == expected, std::string(cs.param) + " rows " + std::to_string(rows.size()));
    std::ifstream in(fs::path(c.out_dir) / "sweep.csv");
    const auto lines = std::count(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>(), '\n');
    v.check(static_cast<std::size_t>(lines) == expected + 1, std::string(cs.param) + " sweep.csv lines");

    std::size_t bad_interval = 0, bad_fraction = 0;
    for (const auto& r : rows) {
      if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo <= r.point && r.point <= r.hi)) ++bad_interval;
      std::size_t count = 0;
      for (std::size_t i = 0; i < cedu.size(); ++i) {
        const bool hit = std::string(cs.param) == "s" ? cedu[i] < r.value : (pedu[i] <= r.value && cedu[i] < 16.0);
        count += hit;
      }
      if (r.affected_fraction != static_cast<double>(count) / static_cast<double>(cedu.size())) ++bad_fraction;
    }
    v.check(bad_interval == 0, std::string(cs.param) + " intervals x" + std::to_string(bad_interval));
    v.check(bad_fraction == 0, std::string(cs.param) + " affected_fraction x" + std::to_string(bad_fraction));
    v.detail << ' ' << cs.param << " rows=" << rows.size();
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  v.detail << " time=" << seconds_since(t0) << "s";
  return v;
}

}  // namespace

int main() {
  report("AC1", "closed-form oracle agreement on the analytic grid", ac1());
  report("AC5", "property suite", ac5());
  report("AC6", "sweep on synthetic PSID-shaped data", ac6());

  SimStudyConfig sc;
  sc.sizes = {100, 200, 400};
  sc.replications = 200;
  sc.bootstrap = 200;
  const auto t0 = Clock::now();
  const SimReport rep = run_study(sc);
  const double secs = seconds_since(t0);
  std::printf("  simulation study R=200 B=200 took %.1fs\n", secs);

  Verdict v2 = ac2(rep);
  report("AC2", "MIAE/RMISE at n=100 within 15% of the reference table", v2);
  report("AC3", "MIAE ratio n=400 vs n=100", ac3(rep));
  Verdict v4 = ac4(rep);
  v4.check(secs < 1800.0, "runtime");
  report("AC4", "bootstrap coverage of Kendall tau", v4);

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
