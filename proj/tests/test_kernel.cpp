#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cfcopula/kernel.hpp"

using namespace cfcopula;

namespace {

double integrate(const KernelSpec& k, int power) {
  auto f = [&](double u) { return std::pow(u, power) * k.eval1(u); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 15, 1e-14);
}

}  // namespace

TEST(Kernel, EpanechnikovValues) {
  const auto k = KernelSpec::epanechnikov();
  EXPECT_DOUBLE_EQ(eval_kernel(k, 0.0), 0.75);
  EXPECT_DOUBLE_EQ(eval_kernel(k, 1.5), 0.0);
  EXPECT_DOUBLE_EQ(eval_kernel(k, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(eval_kernel(k, 0.5), 0.75 * 0.75);

  const auto k2 = KernelSpec::epanechnikov(2);
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_DOUBLE_EQ(eval_kernel(k2, origin), 0.5625);
  const std::vector<double> outside{0.2, -1.2};
  EXPECT_EQ(eval_kernel(k2, outside), 0.0);
}

TEST(Kernel, DimensionMismatchAndNonFinite) {
  const auto k2 = KernelSpec::epanechnikov(2);
  EXPECT_THROW(eval_kernel(k2, 0.0), UsageError);
  const std::vector<double> bad{0.0, std::nan("")};
  EXPECT_THROW(eval_kernel(k2, bad), NumericError);
  EXPECT_THROW(eval_kernel(KernelSpec::epanechnikov(), INFINITY), NumericError);
}

TEST(Kernel, ConstructorRejectsBadOrders) {
  EXPECT_THROW(KernelSpec(KernelFamily::higher_order, 1), UsageError);
  EXPECT_THROW(KernelSpec(KernelFamily::epanechnikov, 4), UsageError);
  EXPECT_THROW(KernelSpec(KernelFamily::epanechnikov, 2, 0), UsageError);
  EXPECT_NO_THROW(KernelSpec::higher_order(6));
}

TEST(Kernel, UnitMassForEveryFamily) {
  for (const auto& k : {KernelSpec::epanechnikov(), KernelSpec(KernelFamily::gaussian_truncated),
                        KernelSpec::higher_order(2), KernelSpec::higher_order(4), KernelSpec::higher_order(6),
                        KernelSpec::higher_order(8)})
    EXPECT_NEAR(integrate(k, 0), 1.0, 1e-6) << k.name();
}

TEST(Kernel, ProductKernelHasUnitMassInTwoDimensions) {
  // Tensor Gauss-Legendre on [-1,1]^2; exact for the polynomial kernels.
  const auto k = KernelSpec::higher_order(4, 2);
  const auto& nodes = boost::math::quadrature::gauss_kronrod<double, 61>::abscissa();
  const auto& wts = boost::math::quadrature::gauss_kronrod<double, 61>::weights();
  std::vector<std::pair<double, double>> rule;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    rule.emplace_back(nodes[i], wts[i]);
    if (nodes[i] != 0.0) rule.emplace_back(-nodes[i], wts[i]);
  }
  double total = 0.0;
  for (auto [a, wa] : rule)
    for (auto [b, wb] : rule) {
      const std::vector<double> u{a, b};
      total += wa * wb * eval_kernel(k, u);
    }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Kernel, HigherOrderMomentsVanish) {
  for (int r : {3, 4, 5, 6, 8}) {
    const auto k = KernelSpec::higher_order(r);
    for (int p = 1; p < r; ++p) EXPECT_NEAR(integrate(k, p), 0.0, 1e-6) << "order " << r << " moment " << p;
  }
  // The second moment of a second-order kernel does not vanish.
  EXPECT_NEAR(integrate(KernelSpec::epanechnikov(), 2), 0.2, 1e-12);
  // Nor does the r-th moment of an order-r kernel.
  EXPECT_GT(std::abs(integrate(KernelSpec::higher_order(4), 4)), 1e-4);
}

TEST(Kernel, SymmetricExactly) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  for (const auto& k : {KernelSpec::epanechnikov(), KernelSpec(KernelFamily::gaussian_truncated),
                        KernelSpec::higher_order(4), KernelSpec::higher_order(6)})
    for (int i = 0; i < 1000; ++i) {
      const double v = u(rng);
      EXPECT_EQ(k.eval1(v), k.eval1(-v));
    }
}

TEST(Kernel, SignProperties) {
  const auto epa = KernelSpec::epanechnikov();
  const auto ho = KernelSpec::higher_order(4);
  EXPECT_TRUE(epa.nonnegative());
  EXPECT_FALSE(ho.nonnegative());
  bool negative_seen = false;
  for (int i = -1000; i <= 1000; ++i) {
    const double v = i / 1000.0;
    EXPECT_GE(epa.eval1(v), 0.0);
    negative_seen = negative_seen || ho.eval1(v) < 0.0;
  }
  EXPECT_TRUE(negative_seen);
}

TEST(Kernel, TruncatedGaussianShape) {
  const KernelSpec g(KernelFamily::gaussian_truncated);
  EXPECT_GT(g.eval1(0.0), g.eval1(0.5));
  EXPECT_GT(g.eval1(0.99), 0.0);
  EXPECT_EQ(g.eval1(1.01), 0.0);
  EXPECT_EQ(g.name(), "gaussian");
}

TEST(Bandwidth, RuleExamples) {
  BandwidthRule rule;
  EXPECT_NEAR(bandwidth(rule, 1000, 1.0), 0.55, 1e-12);
  EXPECT_NEAR(bandwidth(rule, 1000, 2.0), 1.10, 1e-12);
  EXPECT_NEAR(bandwidth({1.0, -1.0 / 3.0}, 8, 1.0), 0.5, 1e-12);
}

TEST(Bandwidth, DegenerateCovariate) {
  BandwidthRule rule;
  EXPECT_THROW(bandwidth(rule, 100, 0.0), DataError);
  EXPECT_THROW(bandwidth(rule, 1, 1.0), DataError);
  const std::vector<double> constant(10, 3.0);
  EXPECT_EQ(sample_sd(constant), 0.0);
}

TEST(Bandwidth, SampleSdUsesNMinusOne) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  EXPECT_NEAR(sample_sd(v), std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(KernelOrder, Examples) {
  EXPECT_TRUE(validate_order(KernelSpec::epanechnikov(), 1).ok);
  const auto fail = validate_order(KernelSpec::epanechnikov(), 2);
  EXPECT_FALSE(fail.ok);
  EXPECT_NE(fail.message.find("r=2"), std::string::npos);
  EXPECT_NE(fail.message.find("d=2"), std::string::npos);
  EXPECT_TRUE(validate_order(KernelSpec::higher_order(4), 3).ok);
}
