#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace cfcopula {

// Synthetic intergenerational-mobility data with the column layout of a
// PSID parent/child income panel. Coding:
//
//   pinc    parent family income, 1000s of dollars        (outcome Y1)
//   cinc    child family income, 1000s of dollars         (outcome Y2)
//   pmale   parent head is male, 0/1
//   pwhite  parent head is white, 0/1
//   pedu    parent years of schooling, integer 3..17
//   cmale   child is male, 0/1
//   cbirth  child year of birth, integer 1938..1986
//   cedu    child years of schooling, integer 7..17 (16 = four-year degree)
//
// Parent schooling below 6 years is pooled into the values 3 and 5 so that
// every schooling level has enough rows to act as kernel donors.
// Both incomes share a family component a. Its loading in child income is
// smaller for children with 16+ years of schooling, so schooling policies
// move the income copula. Covariates are drawn independently of (a, e1, e2).
// Marginal moments are close to those of the 3,895-household PSID sample but
// nothing here is fitted to it.

struct SynthConfig {
  std::size_t n = 3895;
  std::uint64_t seed = 20240101;
};

inline const std::vector<std::string>& synth_columns() {
  static const std::vector<std::string> names{"pinc", "cinc", "pmale", "pwhite", "pedu", "cmale", "cbirth", "cedu"};
  return names;
}

inline CsvTable synth_psid(const SynthConfig& cfg) {
  if (cfg.n < 2) throw UsageError("synthetic data needs n >= 2");
  Engine rng = make_engine(cfg.seed, {0x5359'4e54ULL});
  std::normal_distribution<double> z;
  std::bernoulli_distribution pmale(0.891), pwhite(0.889), cmale(0.486);

  static constexpr std::array<int, 14> pedu_values{3, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17};
  static constexpr std::array<double, 14> pedu_probs{0.0067, 0.0067, 0.012, 0.012, 0.04, 0.03, 0.04,
                                                     0.05,   0.36,   0.08,  0.09,  0.035, 0.12, 0.1276};
  std::discrete_distribution<std::size_t> pedu_pick(pedu_probs.begin(), pedu_probs.end());

  auto clamp_round = [](double v, double lo, double hi) { return std::clamp(std::round(v), lo, hi); };

  CsvTable t;
  t.header = synth_columns();
  t.rows.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const double pm = pmale(rng) ? 1.0 : 0.0;
    const double pw = pwhite(rng) ? 1.0 : 0.0;
    const double pe = pedu_values[pedu_pick(rng)];
    const double cm = cmale(rng) ? 1.0 : 0.0;
    const double cb = clamp_round(1968.1 + 10.5 * z(rng), 1938.0, 1986.0);
    const double ce = clamp_round(14.4 + 0.1 * (pe - 13.0) + 2.0 * z(rng), 7.0, 17.0);

    const double a = 0.35 * z(rng);
    const double e1 = 0.45 * z(rng);
    const double e2 = 0.5 * z(rng);
    const double loading = ce >= 16.0 ? 0.6 : 1.1;
    const double lp = 4.05 + 0.06 * (pe - 13.0) + 0.15 * pw + 0.1 * pm + a + e1;
    const double lc = 4.22 + 0.09 * (ce - 14.0) + 0.004 * (cb - 1968.0) + 0.04 * cm + loading * a + e2;
    const double pinc = std::round(1000.0 * std::clamp(std::exp(lp), 5.0, 1200.0)) / 1000.0;
    const double cinc = std::round(1000.0 * std::clamp(std::exp(lc), 5.0, 1200.0)) / 1000.0;

    t.rows.push_back({format_double(pinc), format_double(cinc), format_double(pm), format_double(pw),
                      format_double(pe), format_double(cm), format_double(cb), format_double(ce)});
  }
  return t;
}

}  // namespace cfcopula
