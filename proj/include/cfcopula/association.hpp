#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copula.hpp"
#include "error.hpp"

namespace cfcopula {

enum class Measure { rho, tau, gamma, beta };

inline constexpr std::array<Measure, 4> all_measures{Measure::rho, Measure::tau, Measure::gamma, Measure::beta};

inline constexpr std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::rho: return "spearman_rho";
    case Measure::tau: return "kendall_tau";
    case Measure::gamma: return "gini_gamma";
    case Measure::beta: return "blomqvist_beta";
  }
  return "?";
}

/// grid_integral: functionals of the grid values themselves (the default).
/// grid_stieltjes: sums against rectangle masses of the grid.
/// pseudo_obs: sums over the weighted atoms, no grid.
enum class MeasureMethod { grid_integral, grid_stieltjes, pseudo_obs };

inline constexpr std::string_view method_name(MeasureMethod m) {
  switch (m) {
    case MeasureMethod::grid_integral: return "grid_integral";
    case MeasureMethod::grid_stieltjes: return "grid_stieltjes";
    case MeasureMethod::pseudo_obs: return "pseudo_obs";
  }
  return "?";
}

/// One value per measure, indexed by Measure.
using MeasureSet = std::array<double, 4>;

inline constexpr std::size_t index_of(Measure m) { return static_cast<std::size_t>(m); }

struct AssociationReport {
  MeasureSet values{};
  MeasureMethod method = MeasureMethod::grid_integral;

  double operator[](Measure m) const { return values[index_of(m)]; }
  double rho() const { return values[0]; }
  double tau() const { return values[1]; }
  double gamma() const { return values[2]; }
  double beta() const { return values[3]; }
};

/// Rectangle increments of C over the m x m grid cells, row index for u1.
struct MassMatrix {
  std::size_t m = 0;
  std::vector<double> mass;

  double at(std::size_t i, std::size_t j) const { return mass[i * m + j]; }
  double total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }
};

inline MassMatrix cell_masses(const CopulaGrid& g) {
  MassMatrix mm{g.m, std::vector<double>(g.m * g.m)};
  for (std::size_t i = 0; i < g.m; ++i)
    for (std::size_t j = 0; j < g.m; ++j)
      mm.mass[i * g.m + j] = g.at(i + 1, j + 1) - g.at(i + 1, j) - g.at(i, j + 1) + g.at(i, j);
  return mm;
}

// Stieltjes sums evaluate the integrand at cell centres; for Kendall's tau
// the centre value of C is the average of the four corner values.

inline double spearman_rho(const CopulaGrid& g, const MassMatrix& mm) {
  double acc = 0.0;
  const double m = static_cast<double>(g.m);
  for (std::size_t i = 0; i < g.m; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / m;
    double row = 0.0;
    for (std::size_t j = 0; j < g.m; ++j) row += ((static_cast<double>(j) + 0.5) / m) * mm.at(i, j);
    acc += u * row;
  }
  return 12.0 * acc - 3.0;
}

inline double kendall_tau(const CopulaGrid& g, const MassMatrix& mm) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.m; ++i)
    for (std::size_t j = 0; j < g.m; ++j) {
      const double centre = 0.25 * (g.at(i, j) + g.at(i + 1, j) + g.at(i, j + 1) + g.at(i + 1, j + 1));
      acc += centre * mm.at(i, j);
    }
  return 4.0 * acc - 1.0;
}

inline double gini_gamma(const CopulaGrid& g, const MassMatrix& mm) {
  double acc = 0.0;
  const double m = static_cast<double>(g.m);
  for (std::size_t i = 0; i < g.m; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / m;
    for (std::size_t j = 0; j < g.m; ++j) {
      const double v = (static_cast<double>(j) + 0.5) / m;
      acc += (std::abs(u + v - 1.0) - std::abs(u - v)) * mm.at(i, j);
    }
  }
  return 2.0 * acc;
}

/// 4 C(0.5, 0.5) - 1, read directly from the grid node.
inline double blomqvist_beta(const CopulaGrid& g) {
  if (g.m % 2 != 0)
    throw UsageError("Blomqvist's beta needs an even grid resolution, got m=" + std::to_string(g.m));
  return 4.0 * g.at(g.m / 2, g.m / 2) - 1.0;
}

inline double spearman_rho(const CopulaGrid& g) { return spearman_rho(g, cell_masses(g)); }
inline double kendall_tau(const CopulaGrid& g) { return kendall_tau(g, cell_masses(g)); }
inline double gini_gamma(const CopulaGrid& g) { return gini_gamma(g, cell_masses(g)); }

// Integral forms, written in C itself rather than dC:
//   rho   = 12 int int C du dv - 3
//   tau   = 1 - 4 int int dC/du dC/dv du dv
//   gamma = 4 [int C(u, 1-u) du - int (u - C(u, u)) du]
// On a proper copula they agree with the Stieltjes definitions. They differ
// on grids whose total mass is not 1, such as bootstrap replicates built
// from fixed kernel weights (mass sum(M W)/n).

/// Cell integrals by the four-corner average (exact for bilinear C).
inline double spearman_rho_integral(const CopulaGrid& g) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.m; ++i)
    for (std::size_t j = 0; j < g.m; ++j)
      acc += g.at(i, j) + g.at(i + 1, j) + g.at(i, j + 1) + g.at(i + 1, j + 1);
  const double m = static_cast<double>(g.m);
  return 12.0 * 0.25 * acc / (m * m) - 3.0;
}

/// Partial derivatives by edge-averaged differences at cell centres.
inline double kendall_tau_integral(const CopulaGrid& g) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.m; ++i)
    for (std::size_t j = 0; j < g.m; ++j) {
      const double du = (g.at(i + 1, j) - g.at(i, j)) + (g.at(i + 1, j + 1) - g.at(i, j + 1));
      const double dv = (g.at(i, j + 1) - g.at(i, j)) + (g.at(i + 1, j + 1) - g.at(i + 1, j));
      acc += du * dv;
    }
  // du, dv above are 2/m times the derivative; the cell area 1/m^2 cancels.
  return 1.0 - acc;
}

/// Trapezoid rule along the two diagonals; needs the anti-diagonal nodes
/// (i, m - i), which every grid has.
inline double gini_gamma_integral(const CopulaGrid& g) {
  double anti = 0.0, diag = 0.0;
  for (std::size_t i = 0; i <= g.m; ++i) {
    const double wt = (i == 0 || i == g.m) ? 0.5 : 1.0;
    anti += wt * g.at(i, g.m - i);
    diag += wt * (g.node(i) - g.at(i, i));
  }
  return 4.0 * (anti - diag) / static_cast<double>(g.m);
}

/// All four measures from a grid. Beta reads the node in either method.
inline AssociationReport measures_from_grid(const CopulaGrid& g,
                                            MeasureMethod method = MeasureMethod::grid_integral) {
  AssociationReport r;
  r.method = method;
  switch (method) {
    case MeasureMethod::grid_integral:
      r.values = {spearman_rho_integral(g), kendall_tau_integral(g), gini_gamma_integral(g), blomqvist_beta(g)};
      break;
    case MeasureMethod::grid_stieltjes: {
      const MassMatrix mm = cell_masses(g);
      r.values = {spearman_rho(g, mm), kendall_tau(g, mm), gini_gamma(g, mm), blomqvist_beta(g)};
      break;
    }
    case MeasureMethod::pseudo_obs:
      throw UsageError("pseudo-observation measures need the atoms, not a grid");
  }
  return r;
}

namespace detail {

/// C_hat(u1_i, u2_i) for every i, with C_hat the weighted estimator itself
/// (each point counts its own mass). O(n log n) via a Fenwick tree over u2.
inline std::vector<double> self_copula_values(const PseudoObservations& p, double total) {
  const std::size_t n = p.u1.size();
  std::vector<double> keys = p.u2;
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<double> tree(keys.size() + 1, 0.0);
  auto rank = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), v) - keys.begin()) + 1;
  };
  auto add = [&](std::size_t k, double w) {
    for (; k < tree.size(); k += k & (~k + 1)) tree[k] += w;
  };
  auto prefix = [&](std::size_t k) {
    double s = 0.0;
    for (; k > 0; k -= k & (~k + 1)) s += tree[k];
    return s;
  };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p.u1[a] < p.u1[b]; });
  std::vector<double> out(n);
  for (std::size_t s = 0; s < n;) {
    std::size_t e = s;
    while (e < n && p.u1[order[e]] == p.u1[order[s]]) ++e;
    for (std::size_t k = s; k < e; ++k) add(rank(p.u2[order[k]]), p.w[order[k]]);
    for (std::size_t k = s; k < e; ++k) out[order[k]] = prefix(rank(p.u2[order[k]])) / total;
    s = e;
  }
  return out;
}

}  // namespace detail

/// The four functionals integrated directly against the weighted atoms,
/// each atom carrying mass w_i / n.
inline AssociationReport measures_from_pseudo_obs(const PseudoObservations& p) {
  const std::size_t n = p.u1.size();
  if (p.u2.size() != n || p.w.size() != n) throw UsageError("pseudo-observation fields differ in length");
  if (n == 0) throw DataError("no pseudo-observations");
  const auto total = static_cast<double>(n);
  const auto chat = detail::self_copula_values(p, total);
  double rho = 0.0, tau = 0.0, gamma = 0.0, beta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = p.u1[i], b = p.u2[i], w = p.w[i];
    rho += w * a * b;
    gamma += w * (std::abs(a + b - 1.0) - std::abs(a - b));
    tau += w * chat[i];
    if (a <= 0.5 && b <= 0.5) beta += w;
  }
  AssociationReport r;
  r.method = MeasureMethod::pseudo_obs;
  r.values = {12.0 * rho / total - 3.0, 4.0 * tau / total - 1.0, 2.0 * gamma / total, 4.0 * beta / total - 1.0};
  return r;
}

/// Closed forms for a Gaussian copula with correlation r.
inline double gaussian_measure(double r, Measure which) {
  if (!(std::abs(r) <= 1.0)) throw UsageError("correlation must lie in [-1,1], got " + std::to_string(r));
  constexpr double two_over_pi = 2.0 / std::numbers::pi;
  switch (which) {
    case Measure::tau:
    case Measure::beta: return two_over_pi * std::asin(r);
    case Measure::rho: return (6.0 / std::numbers::pi) * std::asin(r / 2.0);
    case Measure::gamma: return two_over_pi * (std::asin((1.0 + r) / 2.0) - std::asin((1.0 - r) / 2.0));
  }
  return 0.0;
}

inline MeasureSet gaussian_measures(double r) {
  MeasureSet s{};
  for (Measure m : all_measures) s[index_of(m)] = gaussian_measure(r, m);
  return s;
}

/// Counterfactual minus actual, per measure.
inline MeasureSet policy_effect(const AssociationReport& counterfactual, const AssociationReport& actual) {
  if (counterfactual.method != actual.method)
    throw UsageError("policy effect needs both reports computed by the same method");
  MeasureSet d{};
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = counterfactual.values[k] - actual.values[k];
  return d;
}

}  // namespace cfcopula
