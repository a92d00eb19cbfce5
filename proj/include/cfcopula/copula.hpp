#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "kernel.hpp"
#include "sample.hpp"

namespace cfcopula {

/// Right-continuous step function with jumps at sorted support points.
struct StepCDF {
  std::vector<double> points;      // strictly increasing
  std::vector<double> cumulative;  // value of F at each point
  bool monotone = true;

  double operator()(double y) const {
    auto it = std::upper_bound(points.begin(), points.end(), y);
    if (it == points.begin()) return 0.0;
    return cumulative[static_cast<std::size_t>(it - points.begin()) - 1];
  }

  /// Monotone rearrangement: the cumulative values sorted ascending and
  /// clipped to [0, 1].
  StepCDF rearranged() const {
    StepCDF r = *this;
    std::sort(r.cumulative.begin(), r.cumulative.end());
    for (double& c : r.cumulative) c = std::clamp(c, 0.0, 1.0);
    r.monotone = true;
    return r;
  }
};

namespace detail {

/// Indices that sort v ascending (stable, so ties keep input order).
inline std::vector<std::size_t> sort_order(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

/// Weighted step CDF plus the CDF value at each input row. Masses are
/// w_i / n, so F reaches sum(w)/n at the largest point: exactly 1 for unit
/// or multinomial weights, 1 up to rounding for normalized kernel weights.
struct RankedCDF {
  StepCDF cdf;
  std::vector<double> at_rows;
};

inline RankedCDF ranked_cdf(std::span<const double> y, std::span<const double> w, bool rearrange) {
  const std::size_t n = y.size();
  RankedCDF out;
  if (n == 0) return out;
  auto idx = sort_order(y);
  std::vector<double> run;
  std::vector<std::size_t> group(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = idx[k];
    acc += w.empty() ? 1.0 : w[i];
    if (k + 1 == n || y[idx[k + 1]] != y[i]) {
      out.cdf.points.push_back(y[i]);
      run.push_back(acc);
    }
    group[i] = out.cdf.points.size() - 1;
  }
  // Rows tied with later rows were assigned before their group closed.
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t i = idx[k];
    if (k + 1 < n && y[idx[k + 1]] == y[i]) group[i] = group[idx[k + 1]];
  }
  const auto nd = static_cast<double>(n);
  out.cdf.cumulative.resize(run.size());
  for (std::size_t g = 0; g < run.size(); ++g) out.cdf.cumulative[g] = run[g] / nd;
  out.cdf.monotone = std::is_sorted(out.cdf.cumulative.begin(), out.cdf.cumulative.end());
  if (rearrange && !out.cdf.monotone) out.cdf = out.cdf.rearranged();
  out.at_rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.at_rows[i] = out.cdf.cumulative[group[i]];
  return out;
}

}  // namespace detail

/// Mass 1/n at each observation; ties accumulate.
inline StepCDF empirical_cdf(std::span<const double> column) {
  if (column.empty()) throw DataError("empirical CDF of an empty column");
  return detail::ranked_cdf(column, {}, false).cdf;
}

/// inf{y : F(y) >= u}. u = 0 returns the smallest support point; a u above
/// the last cumulative value (rounding, or non-monotone weights) returns the
/// largest.
inline double generalized_inverse(const StepCDF& F, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw UsageError("generalized inverse needs u in [0,1], got " + std::to_string(u));
  if (F.points.empty()) throw DataError("generalized inverse of an empty CDF");
  if (u <= 0.0) return F.points.front();
  if (F.monotone) {
    auto it = std::lower_bound(F.cumulative.begin(), F.cumulative.end(), u);
    if (it == F.cumulative.end()) return F.points.back();
    return F.points[static_cast<std::size_t>(it - F.cumulative.begin())];
  }
  for (std::size_t k = 0; k < F.cumulative.size(); ++k)
    if (F.cumulative[k] >= u) return F.points[k];
  return F.points.back();
}

/// Counterfactual weights and their diagnostics.
struct WeightVector {
  std::vector<double> w;
  std::size_t negative_count = 0;
  double sum = 0.0;

  std::size_t size() const noexcept { return w.size(); }

  static WeightVector unit(std::size_t n) {
    WeightVector v;
    v.w.assign(n, 1.0);
    v.sum = static_cast<double>(n);
    return v;
  }
  static WeightVector from(std::vector<double> w) {
    WeightVector v;
    v.w = std::move(w);
    for (double x : v.w) {
      v.sum += x;
      if (x < 0.0) ++v.negative_count;
    }
    return v;
  }
};

/// Per-coordinate bandwidths: rule constant * sd_c * n^exponent. Discrete
/// coordinates get 0 (they are exact-matched).
inline std::vector<double> coordinate_bandwidths(const ObservationSample& s, const BandwidthRule& rule) {
  std::vector<double> h(s.dim(), 0.0);
  for (std::size_t c = 0; c < s.dim(); ++c) {
    if (s.discrete[c]) continue;
    auto col = s.x_column(c);
    h[c] = bandwidth(rule, s.size(), sample_sd(col));
  }
  return h;
}

/// W_i = sum_j K((X_i - X*_j)/h) / sum_l K((X_l - X*_j)/h).
///
/// x and xstar are row-major n x d. Discrete coordinates use an exact-match
/// indicator in place of the kernel factor. With `multipliers` (bootstrap
/// counts M), targets and donors are both reweighted:
/// W_i = sum_j M_j K_ij / sum_l M_l K_lj, and then sum_i M_i W_i = n.
inline WeightVector counterfactual_weights(std::span<const double> x, std::span<const double> xstar,
                                           std::size_t d, const std::vector<bool>& discrete,
                                           const KernelSpec& kernel, std::span<const double> h,
                                           std::span<const double> multipliers = {}) {
  if (d == 0) throw UsageError("covariate dimension must be positive");
  const std::size_t n = x.size() / d;
  if (x.size() != n * d || xstar.size() != n * d) throw DataError("x and x* must both have n*d entries");
  if (h.size() != d) throw UsageError("need one bandwidth per covariate");
  for (std::size_t c = 0; c < d; ++c) {
    const bool disc = !discrete.empty() && discrete[c];
    if (!disc && !(h[c] > 0.0)) throw UsageError("bandwidth must be positive");
  }
  if (!multipliers.empty() && multipliers.size() != n) throw UsageError("multiplier length must equal n");

  std::vector<double> col(n);
  std::vector<double> w(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double mj = multipliers.empty() ? 1.0 : multipliers[j];
    if (mj == 0.0) continue;
    const double* target = xstar.data() + j * d;
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* donor = x.data() + i * d;
      double k = 1.0;
      for (std::size_t c = 0; c < d && k != 0.0; ++c) {
        if (!discrete.empty() && discrete[c])
          k = donor[c] == target[c] ? k : 0.0;
        else
          k *= kernel.eval1((donor[c] - target[c]) / h[c]);
      }
      col[i] = k;
      denom += (multipliers.empty() ? 1.0 : multipliers[i]) * k;
    }
    if (denom == 0.0)
      throw NumericError("bandwidth too small: no donor within bandwidth of counterfactual row " +
                         std::to_string(j + 1));
    const double scale = mj / denom;
    for (std::size_t i = 0; i < n; ++i) w[i] += col[i] * scale;
  }
  return WeightVector::from(std::move(w));
}

inline WeightVector counterfactual_weights(const ObservationSample& s, const KernelSpec& kernel,
                                           std::span<const double> h,
                                           std::span<const double> multipliers = {}) {
  return counterfactual_weights(s.x, s.xstar, s.dim(), s.discrete, kernel, h, multipliers);
}

/// Scalar-covariate convenience overload.
inline WeightVector counterfactual_weights(std::span<const double> x, std::span<const double> xstar,
                                           const KernelSpec& kernel, double h) {
  return counterfactual_weights(x, xstar, 1, {}, kernel, std::span<const double>(&h, 1));
}

/// Weighted marginal CDF with mass w_i / n at y_i.
inline StepCDF weighted_marginal_cdf(std::span<const double> y, const WeightVector& w) {
  if (y.size() != w.size()) throw UsageError("outcome and weight lengths differ");
  if (y.empty()) throw DataError("weighted CDF of an empty column");
  return detail::ranked_cdf(y, w.w, false).cdf;
}

/// (1/n) sum_i W_i 1{Y1_i <= a, Y2_i <= b}.
inline double counterfactual_joint_cdf(std::span<const double> y1, std::span<const double> y2,
                                       const WeightVector& w, double a, double b) {
  if (y1.size() != w.size() || y2.size() != w.size()) throw UsageError("outcome and weight lengths differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (y1[i] <= a && y2[i] <= b) acc += w.w[i];
  return acc / static_cast<double>(w.size());
}

/// Copula values on the nodes {(i/m, j/m)}, row index i for u1.
struct CopulaGrid {
  std::size_t m = 0;
  std::vector<double> values;
  bool two_increasing = true;
  bool margins_uniform = true;

  CopulaGrid() = default;
  explicit CopulaGrid(std::size_t res) : m(res), values((res + 1) * (res + 1), 0.0) {}

  std::size_t side() const noexcept { return m + 1; }
  double node(std::size_t i) const noexcept { return static_cast<double>(i) / static_cast<double>(m); }
  double at(std::size_t i, std::size_t j) const noexcept { return values[i * (m + 1) + j]; }
  double& at(std::size_t i, std::size_t j) noexcept { return values[i * (m + 1) + j]; }
};

enum class CopulaVariant { rank_based, deheuvels };

/// Weighted pseudo-observations (F1(Y1_i), F2(Y2_i)) with weights w_i.
struct PseudoObservations {
  std::vector<double> u1;
  std::vector<double> u2;
  std::vector<double> w;
};

inline PseudoObservations pseudo_observations(std::span<const double> y1, std::span<const double> y2,
                                              std::span<const double> w, bool rearrange = false) {
  if (y1.size() != y2.size() || (!w.empty() && w.size() != y1.size()))
    throw UsageError("pseudo-observation inputs differ in length");
  PseudoObservations p;
  p.u1 = detail::ranked_cdf(y1, w, rearrange).at_rows;
  p.u2 = detail::ranked_cdf(y2, w, rearrange).at_rows;
  p.w = w.empty() ? std::vector<double>(y1.size(), 1.0) : std::vector<double>(w.begin(), w.end());
  return p;
}

struct CopulaOptions {
  CopulaVariant variant = CopulaVariant::rank_based;
  bool rearrange = false;  // monotone rearrangement of non-monotone marginals
};

namespace detail {

/// Smallest grid index k with u <= k/m, or m+1 when u > 1. Values within
/// 1e-12 above 1 are rounding residue of normalized weights and map to m.
inline std::size_t grid_index(double u, std::size_t m) {
  const double md = static_cast<double>(m);
  if (u <= 0.0) return 0;
  if (u > 1.0) return u <= 1.0 + 1e-12 ? m : m + 1;
  auto k = static_cast<std::size_t>(std::ceil(u * md));
  if (k > m) k = m;
  while (k > 0 && u <= static_cast<double>(k - 1) / md) --k;
  while (k <= m && u > static_cast<double>(k) / md) ++k;
  return k;
}

/// Smallest k >= 1 with y <= thresholds[k]; thresholds.size() when none.
inline std::size_t threshold_index(double y, const std::vector<double>& thresholds) {
  auto it = std::lower_bound(thresholds.begin() + 1, thresholds.end(), y);
  return static_cast<std::size_t>(it - thresholds.begin());
}

/// Accumulates weights into node cells then forms 2D prefix sums:
/// C(k,l) = sum{w_i : a_i <= k, b_i <= l} / n.
inline CopulaGrid accumulate_grid(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                                  std::span<const double> w, double total, std::size_t m) {
  CopulaGrid g(m);
  const std::size_t s = m + 1;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] <= m && b[i] <= m) g.values[a[i] * s + b[i]] += w.empty() ? 1.0 : w[i];
  for (std::size_t k = 0; k < s; ++k)
    for (std::size_t l = 1; l < s; ++l) g.values[k * s + l] += g.values[k * s + l - 1];
  for (std::size_t k = 1; k < s; ++k)
    for (std::size_t l = 0; l < s; ++l) g.values[k * s + l] += g.values[(k - 1) * s + l];
  for (double& v : g.values) v /= total;
  return g;
}

inline void set_margin_flag(CopulaGrid& g, double max_atom) {
  const double tol = max_atom + 1e-9;
  g.margins_uniform = true;
  for (std::size_t k = 0; k <= g.m; ++k) {
    if (std::abs(g.at(k, g.m) - g.node(k)) > tol || std::abs(g.at(g.m, k) - g.node(k)) > tol) {
      g.margins_uniform = false;
      return;
    }
  }
}

}  // namespace detail

/// Weighted copula estimator on the m-grid. Unit weights (empty span) give
/// the empirical copula. Rank-based variant:
///   C(u1,u2) = (1/n) sum_i w_i 1{F1(Y1_i) <= u1, F2(Y2_i) <= u2},
/// with Fj(y) = (1/n) sum_i w_i 1{Yj_i <= y}. Weights that do not sum to n
/// (bootstrap multipliers times fixed kernel weights) give a grid whose
/// total mass differs from 1; rows with Fj above 1 never enter it.
/// Deheuvels variant thresholds Y_ji at the generalized inverses instead,
/// with the literal inf = -inf at u = 0 so the lower boundary is zero.
inline CopulaGrid weighted_copula(std::span<const double> y1, std::span<const double> y2,
                                  std::span<const double> w, std::size_t m, const CopulaOptions& opt = {}) {
  const std::size_t n = y1.size();
  if (n < 1 || y2.size() != n) throw DataError("copula estimation needs matching, non-empty outcomes");
  if (!w.empty() && w.size() != n) throw UsageError("weight length must equal n");
  if (m < 1) throw UsageError("grid resolution must be >= 1");

  auto r1 = detail::ranked_cdf(y1, w, opt.rearrange);
  auto r2 = detail::ranked_cdf(y2, w, opt.rearrange);
  std::vector<std::size_t> a(n), b(n);
  if (opt.variant == CopulaVariant::rank_based) {
    for (std::size_t i = 0; i < n; ++i) {
      // F <= 0 needs negative weights; such atoms start at the first node
      // so that the u = 0 boundary stays at zero.
      a[i] = std::max<std::size_t>(detail::grid_index(r1.at_rows[i], m), 1);
      b[i] = std::max<std::size_t>(detail::grid_index(r2.at_rows[i], m), 1);
    }
  } else {
    std::vector<double> t1(m + 1), t2(m + 1);
    t1[0] = t2[0] = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= m; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(m);
      t1[k] = generalized_inverse(r1.cdf, u);
      t2[k] = generalized_inverse(r2.cdf, u);
    }
    if (!r1.cdf.monotone || !r2.cdf.monotone) {
      // Generalized inverses of a non-monotone step function are still
      // nondecreasing in u, so binary search over thresholds is valid.
      std::partial_sum(t1.begin() + 1, t1.end(), t1.begin() + 1, [](double p, double q) { return std::max(p, q); });
      std::partial_sum(t2.begin() + 1, t2.end(), t2.begin() + 1, [](double p, double q) { return std::max(p, q); });
    }
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = detail::threshold_index(y1[i], t1);
      b[i] = detail::threshold_index(y2[i], t2);
    }
  }

  const auto total = static_cast<double>(n);
  double max_atom = w.empty() ? 1.0 : 0.0;
  bool negative = false;
  for (double x : w) {
    max_atom = std::max(max_atom, std::abs(x));
    negative = negative || x < 0.0;
  }
  CopulaGrid g = detail::accumulate_grid(a, b, w, total, m);
  g.two_increasing = !negative;
  detail::set_margin_flag(g, max_atom / total);
  return g;
}

inline CopulaGrid empirical_copula(std::span<const double> y1, std::span<const double> y2, std::size_t m = 100,
                                   CopulaVariant variant = CopulaVariant::rank_based) {
  if (y1.size() < 2) throw DataError("empirical copula needs n >= 2");
  return weighted_copula(y1, y2, {}, m, {variant, false});
}

inline CopulaGrid empirical_copula(const ObservationSample& s, std::size_t m = 100,
                                   CopulaVariant variant = CopulaVariant::rank_based) {
  return empirical_copula(s.y1, s.y2, m, variant);
}

/// Counterfactual copula from precomputed weights. The two_increasing flag
/// is cleared whenever any weight is negative.
inline CopulaGrid counterfactual_copula(std::span<const double> y1, std::span<const double> y2,
                                        const WeightVector& w, std::size_t m = 100,
                                        const CopulaOptions& opt = {}) {
  if (w.size() != y1.size()) throw UsageError("weight length must equal n");
  CopulaGrid g = weighted_copula(y1, y2, w.w, m, opt);
  g.two_increasing = w.negative_count == 0;
  return g;
}

inline CopulaGrid counterfactual_copula(const ObservationSample& s, const WeightVector& w, std::size_t m = 100,
                                        const CopulaOptions& opt = {}) {
  return counterfactual_copula(s.y1, s.y2, w, m, opt);
}

}  // namespace cfcopula
