#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace cfcopula {

/// n rows of (y1, y2, x, x*), covariates stored row-major with d columns.
struct ObservationSample {
  std::vector<double> y1;
  std::vector<double> y2;
  std::vector<double> x;
  std::vector<double> xstar;
  std::vector<bool> discrete;  // per covariate column
  std::vector<std::string> x_names;

  std::size_t size() const noexcept { return y1.size(); }
  std::size_t dim() const noexcept { return discrete.size(); }

  std::span<const double> x_row(std::size_t i) const {
    return {x.data() + i * dim(), dim()};
  }
  std::span<const double> xstar_row(std::size_t i) const {
    return {xstar.data() + i * dim(), dim()};
  }

  std::size_t continuous_dim() const {
    return static_cast<std::size_t>(std::count(discrete.begin(), discrete.end(), false));
  }

  /// Column c of x (copy).
  std::vector<double> x_column(std::size_t c) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = x[i * dim() + c];
    return out;
  }

  void validate() const {
    const std::size_t n = size();
    const std::size_t d = dim();
    if (n < 2) throw DataError("sample needs at least 2 rows, got " + std::to_string(n));
    if (y2.size() != n || x.size() != n * d || xstar.size() != n * d)
      throw DataError("sample blocks disagree on row count");
    auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double z) { return std::isfinite(z); });
    };
    if (!finite(y1) || !finite(y2) || !finite(x) || !finite(xstar))
      throw DataError("sample contains non-finite entries");
  }
};

/// A counterfactual covariate value outside the observed range of x.
struct SupportViolation {
  std::size_t row = 0;
  std::size_t column = 0;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Rows whose x* leaves the coordinate-wise [min, max] box of x. Discrete
/// columns additionally require the x* value to occur among the x values.
inline std::vector<SupportViolation> support_violations(const ObservationSample& s) {
  const std::size_t n = s.size(), d = s.dim();
  std::vector<SupportViolation> out;
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<double> col = s.x_column(c);
    std::sort(col.begin(), col.end());
    const double lo = col.front(), hi = col.back();
    for (std::size_t i = 0; i < n; ++i) {
      double v = s.xstar[i * d + c];
      bool bad = v < lo || v > hi;
      if (!bad && s.discrete[c]) bad = !std::binary_search(col.begin(), col.end(), v);
      if (bad) out.push_back({i, c, v, lo, hi});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.row != b.row ? a.row < b.row : a.column < b.column;
  });
  return out;
}

}  // namespace cfcopula
