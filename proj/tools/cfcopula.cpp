// Command-line front end: estimate, bootstrap, simulate, sweep, synth-data.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "cfcopula/commands.hpp"

namespace {

int run(int argc, char** argv) {
  using namespace cfcopula;
  RunConfig cfg;

  CLI::App app{"Counterfactual copula estimation and inference"};
  app.set_version_flag("--version", std::string(version_string));
  app.set_config("--config", "", "flat key=value file; command-line flags override it");
  app.require_subcommand(1);

  app.add_option("--input", cfg.input, "headered CSV input");
  app.add_option("--y1", cfg.schema.y1, "first outcome column");
  app.add_option("--y2", cfg.schema.y2, "second outcome column");
  app.add_option("--x", cfg.schema.x, "covariate columns")->delimiter(',');
  app.add_option("--discrete", cfg.schema.discrete, "covariates matched exactly instead of smoothed")->delimiter(',');
  app.add_option("--xstar", cfg.schema.xstar, "counterfactual covariate columns, parallel to --x")->delimiter(',');
  app.add_option("--scenario", cfg.scenario, "policy, e.g. \"max_with(cedu,16)\"");
  app.add_option("--kernel", cfg.kernel, "epanechnikov | gaussian | higher_order")->capture_default_str();
  app.add_option("--kernel-order", cfg.kernel_order, "order of the higher_order kernel")->capture_default_str();
  app.add_option("--bandwidth-c", cfg.bandwidth.constant, "bandwidth constant c in h = c sd n^e")
      ->capture_default_str();
  app.add_option("--bandwidth-exp", cfg.bandwidth.exponent, "bandwidth exponent e")->capture_default_str();
  app.add_option("--grid-m", cfg.grid_m, "grid resolution (even)")->capture_default_str();
  app.add_option("--variant", cfg.variant, "rank | deheuvels")->capture_default_str();
  app.add_flag("--rearrange", cfg.rearrange, "monotone-rearrange counterfactual marginals");
  app.add_option("--boot-b", cfg.boot_b, "bootstrap replicates")->capture_default_str();
  app.add_option("--level", cfg.level, "confidence level")->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_flag("--recompute-weights", cfg.recompute_weights, "recompute kernel weights in every bootstrap draw");
  app.add_flag("--band", cfg.band, "also write a sup-norm band for the counterfactual copula");
  app.add_option("--threads", cfg.threads, "worker threads, 0 for all cores")->capture_default_str();
  app.add_option("--out-dir", cfg.out_dir, "output directory")->capture_default_str();
  app.add_option("--sizes", cfg.sizes, "simulation sample sizes")->delimiter(',');
  app.add_option("--reps", cfg.reps, "simulation replications")->capture_default_str();
  app.add_option("--param", cfg.param, "sweep parameter: s or s'")->capture_default_str();
  app.add_option("--range", cfg.range, "sweep values a:b, inclusive");
  app.add_option("--column", cfg.column, "schooling column the sweep policy raises")->capture_default_str();
  app.add_option("--trigger", cfg.trigger, "column compared with s' in the threshold policy")->capture_default_str();
  app.add_option("--floor", cfg.floor, "floor applied by the threshold policy")->capture_default_str();
  app.add_option("--n", cfg.synth_n, "rows of synthetic data")->capture_default_str();

  auto* est = app.add_subcommand("estimate", "actual and counterfactual copulas with association measures");
  auto* boot = app.add_subcommand("bootstrap", "estimate plus bootstrap confidence intervals");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo study on the Gaussian design");
  auto* swp = app.add_subcommand("sweep", "policy-parameter sweep with intervals");
  auto* syn = app.add_subcommand("synth-data", "write synthetic PSID-shaped data");
  for (auto* s : {est, boot, sim, swp, syn}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::usage);
  }

  if (*est) {
    cmd_estimate(cfg, std::cerr);
    std::cout << "wrote estimate files to " << cfg.out_dir << '\n';
  } else if (*boot) {
    cmd_bootstrap(cfg, std::cerr);
    std::cout << "wrote bootstrap files to " << cfg.out_dir << '\n';
  } else if (*sim) {
    cmd_simulate(cfg, std::cerr);
    std::cout << "wrote sim_report.csv to " << cfg.out_dir << '\n';
  } else if (*swp) {
    const auto rows = cmd_sweep(cfg, std::cerr);
    std::cout << "wrote " << rows.size() << " sweep rows to " << cfg.out_dir << "/sweep.csv\n";
  } else if (*syn) {
    const auto t = cmd_synth(cfg, std::cerr);
    std::cout << "wrote " << t.rows.size() << " rows to " << cfg.out_dir << "/synthetic_psid.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cfcopula::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(cfcopula::ErrorKind::numeric);
  }
}
