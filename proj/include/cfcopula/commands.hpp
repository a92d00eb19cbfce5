#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "association.hpp"
#include "bootstrap.hpp"
#include "copula.hpp"
#include "error.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "rng.hpp"
#include "sample.hpp"
#include "scenario.hpp"
#include "simulation.hpp"
#include "synth.hpp"

namespace cfcopula {

inline constexpr std::string_view version_string = "cfcopula 1.0.0";

/// Everything a command needs. Field names follow the command-line flags.
struct RunConfig {
  std::string input;
  Schema schema;
  std::string scenario;

  std::string kernel = "epanechnikov";
  int kernel_order = 2;
  BandwidthRule bandwidth{};
  std::size_t grid_m = 100;
  std::string variant = "rank";
  bool rearrange = false;

  std::size_t boot_b = 1000;
  double level = 0.95;
  std::uint64_t seed = 20240101;
  bool recompute_weights = false;
  bool band = false;
  unsigned threads = 0;

  std::string out_dir = ".";

  std::vector<std::size_t> sizes{100, 200, 400};
  std::size_t reps = 1000;

  std::string param = "s";
  std::string range;
  std::string column = "cedu";
  std::string trigger = "pedu";
  double floor = 16.0;

  std::size_t synth_n = 3895;

  bool has_scenario() const { return !scenario.empty(); }
  bool has_xstar() const { return !schema.xstar.empty(); }

  /// estimate and bootstrap take the policy from exactly one place.
  void validate_policy() const {
    if (has_scenario() == has_xstar())
      throw UsageError(has_scenario() ? "give either --scenario or --xstar columns, not both"
                                      : "a policy is required: give --scenario or --xstar columns");
  }

  KernelSpec kernel_spec() const {
    if (kernel == "epanechnikov") return KernelSpec(KernelFamily::epanechnikov, kernel_order);
    if (kernel == "gaussian") return KernelSpec(KernelFamily::gaussian_truncated, kernel_order);
    if (kernel == "higher_order") return KernelSpec(KernelFamily::higher_order, kernel_order);
    throw UsageError("unknown kernel '" + kernel + "' (epanechnikov, gaussian, higher_order)");
  }

  CopulaOptions copula_options() const {
    CopulaOptions o;
    if (variant == "rank") o.variant = CopulaVariant::rank_based;
    else if (variant == "deheuvels") o.variant = CopulaVariant::deheuvels;
    else throw UsageError("unknown copula variant '" + variant + "' (rank, deheuvels)");
    o.rearrange = rearrange;
    return o;
  }

  void validate_common() const {
    if (grid_m < 2 || grid_m % 2 != 0) throw UsageError("--grid-m must be an even number >= 2");
    if (!(level > 0.0 && level < 1.0)) throw UsageError("--level must lie in (0,1)");
    if (!(bandwidth.constant > 0.0)) throw UsageError("--bandwidth-c must be positive");
    (void)kernel_spec();
    (void)copula_options();
  }
};

namespace detail {

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& e : v) s += (s.empty() ? "" : ",") + e;
  return s;
}

inline std::ofstream open_out(const std::filesystem::path& dir, std::string_view name) {
  std::ofstream out(dir / name);
  if (!out) throw DataError("cannot write '" + (dir / name).string() + "'");
  return out;
}

inline std::filesystem::path prepare_dir(const std::string& d) {
  std::filesystem::path p(d.empty() ? "." : d);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw DataError("cannot create output directory '" + p.string() + "': " + ec.message());
  return p;
}

}  // namespace detail

/// key=value lines that --config reads back; the command and version go in
/// comments.
inline void write_manifest(const std::filesystem::path& path, std::string_view command, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "# " << version_string << "\n# command: " << command << '\n';
  auto kv = [&](std::string_view k, const auto& v) { out << k << '=' << v << '\n'; };
  if (!c.input.empty()) kv("input", c.input);
  if (!c.schema.y1.empty()) kv("y1", c.schema.y1);
  if (!c.schema.y2.empty()) kv("y2", c.schema.y2);
  if (!c.schema.x.empty()) kv("x", detail::join(c.schema.x));
  if (!c.schema.discrete.empty()) kv("discrete", detail::join(c.schema.discrete));
  if (!c.schema.xstar.empty()) kv("xstar", detail::join(c.schema.xstar));
  if (!c.scenario.empty()) kv("scenario", "\"" + c.scenario + "\"");
  kv("kernel", c.kernel);
  kv("kernel-order", c.kernel_order);
  kv("bandwidth-c", format_double(c.bandwidth.constant));
  kv("bandwidth-exp", format_double(c.bandwidth.exponent));
  kv("grid-m", c.grid_m);
  kv("variant", c.variant);
  kv("rearrange", c.rearrange ? "true" : "false");
  kv("boot-b", c.boot_b);
  kv("level", format_double(c.level));
  kv("seed", c.seed);
  kv("recompute-weights", c.recompute_weights ? "true" : "false");
  if (command == "simulate") {
    std::string s;
    for (auto n : c.sizes) s += (s.empty() ? "" : ",") + std::to_string(n);
    kv("sizes", s);
    kv("reps", c.reps);
  }
  if (command == "sweep") {
    kv("param", c.param);
    kv("range", c.range);
    kv("column", c.column);
    kv("trigger", c.trigger);
    kv("floor", format_double(c.floor));
  }
  if (command == "synth-data") kv("n", c.synth_n);
}

/// Sample with x* set, its kernel weights and the diagnostics worth reporting.
struct Prepared {
  ObservationSample sample;
  KernelSpec kernel;
  std::vector<double> bandwidths;
  WeightVector weights;
  std::vector<SupportViolation> support_warnings;
  OrderCheck order;
  std::size_t affected = 0;
};

inline Prepared prepare_weights(ObservationSample sample, const RunConfig& cfg) {
  Prepared p;
  p.sample = std::move(sample);
  p.kernel = cfg.kernel_spec();
  p.support_warnings = support_violations(p.sample);
  p.order = validate_order(p.kernel, p.sample.continuous_dim());
  p.bandwidths = coordinate_bandwidths(p.sample, cfg.bandwidth);
  p.weights = counterfactual_weights(p.sample, p.kernel, p.bandwidths);
  p.affected = affected_rows(p.sample);
  return p;
}

inline Prepared prepare(const RunConfig& cfg, std::ostream& log) {
  cfg.validate_policy();
  cfg.validate_common();
  if (cfg.input.empty()) throw UsageError("--input is required");
  ObservationSample s = sample_from_table(read_csv(cfg.input), cfg.schema);
  if (cfg.has_scenario()) s = apply_scenario(s, parse_scenario(cfg.scenario));
  Prepared p = prepare_weights(std::move(s), cfg);
  if (!p.order.ok) log << "warning: " << p.order.message << '\n';
  if (!p.support_warnings.empty())
    log << "warning: " << p.support_warnings.size()
        << " counterfactual covariate values fall outside the observed support (see support_warnings.csv)\n";
  if (p.weights.negative_count > 0)
    log << "warning: " << p.weights.negative_count
        << " negative kernel weights; the counterfactual grid may not be 2-increasing\n";
  return p;
}

inline BootstrapProblem make_problem(const Prepared& p, const RunConfig& cfg) {
  BootstrapProblem bp;
  bp.sample = &p.sample;
  bp.weights = p.weights;
  bp.kernel = p.kernel;
  bp.bandwidths = p.bandwidths;
  bp.m = cfg.grid_m;
  bp.options = cfg.copula_options();
  return bp;
}

/// target,measure,method,point and, with a bootstrap run, quantile,lo,hi.
inline void write_measures_csv(std::ostream& out, const Estimate& e, const BootstrapRun* run) {
  out << "target,measure,method,point";
  if (run) out << ",quantile,lo,hi";
  out << '\n';
  const auto values = target_values(e);
  for (TargetKind k : {TargetKind::actual, TargetKind::counterfactual, TargetKind::effect})
    for (Measure m : all_measures) {
      const std::size_t t = target_index(k, m);
      out << target_kind_name(k) << ',' << measure_name(m) << ',' << method_name(e.actual_report.method) << ','
          << format_double(values[t]);
      if (run) {
        const auto& iv = run->intervals[t];
        out << ',' << format_double(iv.quantile) << ',' << format_double(iv.lo) << ',' << format_double(iv.hi);
      }
      out << '\n';
    }
}

inline void write_weights_csv(std::ostream& out, const WeightVector& w) {
  out << "row,weight\n";
  for (std::size_t i = 0; i < w.size(); ++i) out << i + 1 << ',' << format_double(w.w[i]) << '\n';
}

inline void write_support_csv(std::ostream& out, const Prepared& p) {
  out << "row,column,value,lo,hi\n";
  for (const auto& v : p.support_warnings)
    out << v.row + 1 << ',' << p.sample.x_names[v.column] << ',' << format_double(v.value) << ','
        << format_double(v.lo) << ',' << format_double(v.hi) << '\n';
}

inline void write_summary(std::ostream& out, std::string_view command, const RunConfig& cfg, const Prepared& p,
                          const Estimate& e, const BootstrapRun* run) {
  out << version_string << " " << command << "\n\n";
  out << "rows                  " << p.sample.size() << '\n';
  out << "covariates            " << detail::join(p.sample.x_names) << '\n';
  out << "policy                " << (cfg.has_scenario() ? cfg.scenario : "xstar=" + detail::join(cfg.schema.xstar))
      << '\n';
  out << "rows changed          " << p.affected << '\n';
  out << "kernel                " << p.kernel.name() << " (order " << p.kernel.order() << ")\n";
  out << "bandwidths            ";
  for (std::size_t c = 0; c < p.bandwidths.size(); ++c)
    out << (c ? ", " : "") << p.sample.x_names[c] << '='
        << (p.sample.discrete[c] ? std::string("exact") : format_double(p.bandwidths[c]));
  out << '\n';
  out << "order check           " << p.order.message << '\n';
  out << "weight sum            " << format_double(p.weights.sum) << '\n';
  out << "negative weights      " << p.weights.negative_count << '\n';
  out << "support warnings      " << p.support_warnings.size() << '\n';
  out << "grid                  m=" << cfg.grid_m << ", variant " << cfg.variant << '\n';
  if (run)
    out << "bootstrap             B=" << run->replicates << ", level " << run->level << ", seed " << cfg.seed
        << ", redrawn " << run->discarded << '\n';
  out << '\n';

  out << "measure            actual  counterfactual     effect";
  if (run) out << "   effect interval";
  out << '\n';
  for (Measure m : all_measures) {
    char line[160];
    std::snprintf(line, sizeof line, "%-15s %9.4f %15.4f %10.4f", std::string(measure_name(m)).c_str(),
                  e.actual_report[m], e.counterfactual_report[m], e.effect[index_of(m)]);
    out << line;
    if (run) {
      const auto& iv = run->interval(TargetKind::effect, m);
      std::snprintf(line, sizeof line, "   [%.4f, %.4f]", iv.lo, iv.hi);
      out << line;
    }
    out << '\n';
  }
  if (run)
    for (const auto& d : run->diagnostics) out << "note: " << d << '\n';
}

struct EstimateResult {
  Prepared prepared;
  Estimate estimate;
};

inline void write_estimate_files(const std::filesystem::path& dir, std::string_view command, const RunConfig& cfg,
                                 const Prepared& p, const Estimate& e, const BootstrapRun* run) {
  write_grid_csv(dir / "actual_grid.csv", e.actual);
  write_grid_csv(dir / "counterfactual_grid.csv", e.counterfactual);
  {
    auto out = detail::open_out(dir, "measures.csv");
    write_measures_csv(out, e, run);
  }
  {
    auto out = detail::open_out(dir, "weights.csv");
    write_weights_csv(out, p.weights);
  }
  {
    auto out = detail::open_out(dir, "support_warnings.csv");
    write_support_csv(out, p);
  }
  {
    auto out = detail::open_out(dir, "summary.txt");
    write_summary(out, command, cfg, p, e, run);
  }
  write_manifest(dir / "manifest.txt", command, cfg);
}

inline EstimateResult cmd_estimate(const RunConfig& cfg, std::ostream& log) {
  EstimateResult r;
  r.prepared = prepare(cfg, log);
  r.estimate = estimate(r.prepared.sample, r.prepared.weights, cfg.grid_m, cfg.copula_options());
  write_estimate_files(detail::prepare_dir(cfg.out_dir), "estimate", cfg, r.prepared, r.estimate, nullptr);
  return r;
}

struct BootstrapResult {
  Prepared prepared;
  BootstrapRun run;
};

inline BootstrapResult cmd_bootstrap(const RunConfig& cfg, std::ostream& log) {
  if (cfg.boot_b < 2) throw UsageError("--boot-b must be at least 2");
  BootstrapResult r;
  r.prepared = prepare(cfg, log);
  BootstrapConfig bc;
  bc.replicates = cfg.boot_b;
  bc.level = cfg.level;
  bc.seed = cfg.seed;
  bc.recompute_weights = cfg.recompute_weights;
  bc.keep_grids = cfg.band;
  bc.threads = cfg.threads;
  r.run = run_bootstrap(make_problem(r.prepared, cfg), bc);
  for (const auto& d : r.run.diagnostics) log << "note: " << d << '\n';

  const auto dir = detail::prepare_dir(cfg.out_dir);
  write_estimate_files(dir, "bootstrap", cfg, r.prepared, r.run.point, &r.run);
  if (cfg.band) {
    auto band = sup_band(r.run.counterfactual_grids, r.run.point.counterfactual, r.run.n, cfg.level);
    auto out = detail::open_out(dir, "counterfactual_band.csv");
    out << "u1,u2,lower,upper\n";
    for (std::size_t i = 0; i <= band.lower.m; ++i)
      for (std::size_t j = 0; j <= band.lower.m; ++j)
        out << format_double(band.lower.node(i)) << ',' << format_double(band.lower.node(j)) << ','
            << format_double(band.lower.at(i, j)) << ',' << format_double(band.upper.at(i, j)) << '\n';
  }
  return r;
}

inline void write_sim_report(std::ostream& out, const SimReport& rep) {
  out << "n,target,metric,value\n";
  for (const auto& r : rep.rows) out << r.n << ',' << r.target << ',' << r.metric << ',' << format_double(r.value) << '\n';
}

inline SimReport cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate_common();
  SimStudyConfig sc;
  sc.sizes = cfg.sizes;
  sc.replications = cfg.reps;
  sc.bootstrap = cfg.boot_b;
  sc.level = cfg.level;
  sc.m = cfg.grid_m;
  sc.bandwidth_rule = cfg.bandwidth;
  sc.kernel = cfg.kernel_spec();
  sc.recompute_weights = cfg.recompute_weights;
  sc.seed = cfg.seed;
  sc.threads = cfg.threads;
  if (!validate_order(sc.kernel, 1).ok) log << "warning: " << validate_order(sc.kernel, 1).message << '\n';
  SimReport rep = run_study(sc);
  const auto dir = detail::prepare_dir(cfg.out_dir);
  auto out = detail::open_out(dir, "sim_report.csv");
  write_sim_report(out, rep);
  write_manifest(dir / "manifest.txt", "simulate", cfg);
  return rep;
}

struct SweepRow {
  double value = 0.0;
  Measure measure = Measure::rho;
  TargetKind target = TargetKind::actual;
  double point = 0.0;
  double lo = std::nan("");
  double hi = std::nan("");
  double affected_fraction = 0.0;
};

/// "a:b" with integer endpoints, inclusive. b < a is an empty range.
inline std::vector<double> parse_range(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw UsageError("range must look like a:b, got '" + std::string(text) + "'");
  const double a = detail::scenario_number(text.substr(0, colon), text);
  const double b = detail::scenario_number(text.substr(colon + 1), text);
  if (a != std::floor(a) || b != std::floor(b)) throw UsageError("range endpoints must be integers");
  if (b < a) throw UsageError("empty sweep range '" + std::string(text) + "'");
  std::vector<double> v;
  for (double x = a; x <= b; x += 1.0) v.push_back(x);
  return v;
}

inline ScenarioSpec sweep_scenario(const RunConfig& cfg, double value) {
  if (cfg.param == "s") return ScenarioSpec::max_with(cfg.column, value);
  if (cfg.param == "s'" || cfg.param == "sprime")
    return ScenarioSpec::conditional_max(cfg.column, cfg.trigger, value, cfg.floor);
  throw UsageError("--param must be s or s', got '" + cfg.param + "'");
}

/// One policy per parameter value; each value gets its own bootstrap stream.
/// With boot_b == 0 only point estimates are produced.
inline std::vector<SweepRow> sweep(const ObservationSample& base, const RunConfig& cfg) {
  const auto values = parse_range(cfg.range);
  if (cfg.boot_b == 1) throw UsageError("--boot-b must be 0 or at least 2");
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < values.size(); ++k) {
    Prepared p = prepare_weights(apply_scenario(base, sweep_scenario(cfg, values[k])), cfg);
    const double frac = static_cast<double>(p.affected) / static_cast<double>(p.sample.size());
    Estimate e;
    BootstrapRun run;
    const bool boot = cfg.boot_b >= 2;
    if (boot) {
      BootstrapConfig bc;
      bc.replicates = cfg.boot_b;
      bc.level = cfg.level;
      bc.seed = derive_seed(cfg.seed, {k});
      bc.recompute_weights = cfg.recompute_weights;
      bc.threads = cfg.threads;
      run = run_bootstrap(make_problem(p, cfg), bc);
      e = run.point;
    } else {
      e = estimate(p.sample, p.weights, cfg.grid_m, cfg.copula_options());
    }
    const auto point = target_values(e);
    for (Measure m : all_measures)
      for (TargetKind t : {TargetKind::actual, TargetKind::counterfactual, TargetKind::effect}) {
        SweepRow r;
        r.value = values[k];
        r.measure = m;
        r.target = t;
        r.point = point[target_index(t, m)];
        if (boot) {
          r.lo = run.interval(t, m).lo;
          r.hi = run.interval(t, m).hi;
        }
        r.affected_fraction = frac;
        rows.push_back(r);
      }
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, std::string_view param, const std::vector<SweepRow>& rows) {
  out << "parameter,value,measure,target,point,lo,hi,affected_fraction\n";
  for (const auto& r : rows)
    out << param << ',' << format_double(r.value) << ',' << measure_name(r.measure) << ','
        << target_kind_name(r.target) << ',' << format_double(r.point) << ',' << format_double(r.lo) << ','
        << format_double(r.hi) << ',' << format_double(r.affected_fraction) << '\n';
}

inline std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  cfg.validate_common();
  if (cfg.has_scenario() || cfg.has_xstar())
    throw UsageError("sweep builds its own policy; drop --scenario and --xstar");
  if (cfg.input.empty()) throw UsageError("--input is required");
  (void)sweep_scenario(cfg, 0.0);
  const ObservationSample base = sample_from_table(read_csv(cfg.input), cfg.schema);
  const auto rows = sweep(base, cfg);
  if (!validate_order(cfg.kernel_spec(), base.continuous_dim()).ok)
    log << "warning: " << validate_order(cfg.kernel_spec(), base.continuous_dim()).message << '\n';
  const auto dir = detail::prepare_dir(cfg.out_dir);
  auto out = detail::open_out(dir, "sweep.csv");
  write_sweep_csv(out, cfg.param == "sprime" ? "s'" : cfg.param, rows);
  write_manifest(dir / "manifest.txt", "sweep", cfg);
  return rows;
}

inline CsvTable cmd_synth(const RunConfig& cfg, std::ostream&) {
  CsvTable t = synth_psid({cfg.synth_n, cfg.seed});
  const auto dir = detail::prepare_dir(cfg.out_dir);
  write_csv(dir / "synthetic_psid.csv", t);
  return t;
}

}  // namespace cfcopula
