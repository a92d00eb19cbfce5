#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace cfcopula {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// P(Z1 <= a, Z2 <= b) for standard normals with correlation r, |r| < 1,
/// from the one-dimensional reduction
///   int_{-inf}^{a} phi(z) Phi((b - r z) / sqrt(1 - r^2)) dz
/// with adaptive Gauss-Kronrod quadrature. The lower limit is cut at -12
/// (neglected mass below 2e-33).
inline double bivariate_normal_cdf(double a, double b, double r) {
  constexpr double lower = -12.0;
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::quiet_NaN();
  if (a == -std::numeric_limits<double>::infinity() || b == -std::numeric_limits<double>::infinity()) return 0.0;
  if (a == std::numeric_limits<double>::infinity()) return normal_cdf(b);
  if (b == std::numeric_limits<double>::infinity()) return normal_cdf(a);
  if (r == 0.0) return normal_cdf(a) * normal_cdf(b);
  // Integrate along the coordinate with the smaller limit; the integrand is
  // symmetric in (a, b).
  if (b < a) std::swap(a, b);
  if (a <= lower) return 0.0;
  const double s = std::sqrt(1.0 - r * r);
  auto f = [&](double z) { return normal_pdf(z) * normal_cdf((b - r * z) / s); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lower, a, 20, 1e-14, &err);
}

}  // namespace cfcopula
