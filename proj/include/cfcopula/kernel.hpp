#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace cfcopula {

enum class KernelFamily { epanechnikov, gaussian_truncated, higher_order };

/// A symmetric kernel on [-1,1], applied as a product over coordinates.
///
/// The higher-order family multiplies the Epanechnikov kernel by an even
/// polynomial whose coefficients make the moments of orders 1..r-1 vanish.
/// Odd moments vanish by symmetry, so only the even ones enter the solve.
/// For r > 2 the kernel takes negative values near the edges of its support.
class KernelSpec {
 public:
  static constexpr double gaussian_scale = 3.0;  // support edge at 3 sigma

  explicit KernelSpec(KernelFamily family = KernelFamily::epanechnikov,
                      int order = 2, std::size_t dim = 1)
      : family_(family), order_(order), dim_(dim) {
    if (order < 2) throw UsageError("kernel order must be >= 2, got " + std::to_string(order));
    if (dim < 1) throw UsageError("kernel dimension must be >= 1");
    if (family != KernelFamily::higher_order && order != 2)
      throw UsageError("only the higher_order family supports order != 2");
    if (family == KernelFamily::higher_order) coef_ = solve_coefficients(order);
    if (family == KernelFamily::gaussian_truncated)
      gauss_norm_ = gaussian_scale / std::erf(gaussian_scale / std::numbers::sqrt2);
  }

  static KernelSpec epanechnikov(std::size_t dim = 1) {
    return KernelSpec(KernelFamily::epanechnikov, 2, dim);
  }
  static KernelSpec higher_order(int order, std::size_t dim = 1) {
    return KernelSpec(KernelFamily::higher_order, order, dim);
  }

  KernelFamily family() const noexcept { return family_; }
  int order() const noexcept { return order_; }
  std::size_t dim() const noexcept { return dim_; }
  bool nonnegative() const noexcept { return coef_.size() <= 1; }

  /// Coefficients a_k of the polynomial sum_k a_k u^{2k} (higher_order only).
  const std::vector<double>& coefficients() const noexcept { return coef_; }

  /// One-dimensional kernel value.
  double eval1(double u) const noexcept {
    double a = std::abs(u);
    if (a > 1.0) return 0.0;
    switch (family_) {
      case KernelFamily::epanechnikov:
        return 0.75 * (1.0 - a * a);
      case KernelFamily::gaussian_truncated: {
        double z = gaussian_scale * a;
        return gauss_norm_ * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
      }
      case KernelFamily::higher_order: {
        double a2 = a * a, p = 0.0;
        for (auto it = coef_.rbegin(); it != coef_.rend(); ++it) p = p * a2 + *it;
        return 0.75 * (1.0 - a2) * p;
      }
    }
    return 0.0;
  }

  std::string name() const {
    switch (family_) {
      case KernelFamily::epanechnikov: return "epanechnikov";
      case KernelFamily::gaussian_truncated: return "gaussian";
      case KernelFamily::higher_order: return "higher_order(" + std::to_string(order_) + ")";
    }
    return "?";
  }

 private:
  // Moment conditions: sum_k a_k mu_{2(j+k)} = [j == 0], j = 0..q, with
  // mu_{2p} = 3 / ((2p+1)(2p+3)) the Epanechnikov moments.
  static std::vector<double> solve_coefficients(int order) {
    const std::size_t q = static_cast<std::size_t>((order - 1) / 2);
    const std::size_t n = q + 1;
    auto mu = [](std::size_t p) {
      double t = 2.0 * static_cast<double>(p);
      return 3.0 / ((t + 1.0) * (t + 3.0));
    };
    std::vector<double> a(n * n), b(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) a[j * n + k] = mu(j + k);
    b[0] = 1.0;
    // Gaussian elimination with partial pivoting; n is tiny.
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t piv = c;
      for (std::size_t r = c + 1; r < n; ++r)
        if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
      if (piv != c) {
        for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
        std::swap(b[c], b[piv]);
      }
      for (std::size_t r = c + 1; r < n; ++r) {
        double f = a[r * n + c] / a[c * n + c];
        for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
        b[r] -= f * b[c];
      }
    }
    std::vector<double> x(n);
    for (std::size_t c = n; c-- > 0;) {
      double s = b[c];
      for (std::size_t k = c + 1; k < n; ++k) s -= a[c * n + k] * x[k];
      x[c] = s / a[c * n + c];
    }
    return x;
  }

  KernelFamily family_;
  int order_;
  std::size_t dim_;
  std::vector<double> coef_{1.0};
  double gauss_norm_ = 0.0;
};

/// Product kernel over the coordinates of u.
inline double eval_kernel(const KernelSpec& spec, std::span<const double> u) {
  if (u.size() != spec.dim())
    throw UsageError("kernel argument has dimension " + std::to_string(u.size()) +
                     ", kernel expects " + std::to_string(spec.dim()));
  double v = 1.0;
  for (double c : u) {
    if (!std::isfinite(c)) throw NumericError("kernel argument is not finite");
    v *= spec.eval1(c);
  }
  return v;
}

inline double eval_kernel(const KernelSpec& spec, double u) {
  return eval_kernel(spec, std::span<const double>(&u, 1));
}

/// h = constant * s_X * n^exponent.
struct BandwidthRule {
  double constant = 5.5;
  double exponent = -1.0 / 3.0;
};

inline double bandwidth(const BandwidthRule& rule, std::size_t n, double sd) {
  if (n < 2) throw DataError("bandwidth needs n >= 2, got " + std::to_string(n));
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw DataError("degenerate covariate: sample standard deviation is " + std::to_string(sd));
  if (!(rule.constant > 0.0)) throw UsageError("bandwidth constant must be positive");
  return rule.constant * sd * std::pow(static_cast<double>(n), rule.exponent);
}

/// Sample standard deviation with the n-1 denominator.
inline double sample_sd(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

struct OrderCheck {
  bool ok = false;
  std::string message;
};

/// The kernel order must exceed the number of smoothed covariates.
inline OrderCheck validate_order(const KernelSpec& spec, std::size_t d) {
  OrderCheck c;
  c.ok = static_cast<std::size_t>(spec.order()) > d;
  c.message = "kernel order r=" + std::to_string(spec.order()) +
              (c.ok ? " exceeds" : " does not exceed") +
              " covariate dimension d=" + std::to_string(d);
  return c;
}

}  // namespace cfcopula
