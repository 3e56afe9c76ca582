#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ambitlab/besov.hpp"
#include "ambitlab/rng.hpp"

using namespace ambitlab;
using namespace ambitlab::besov;

namespace {

double gauss_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

GriddedFunction sample_grid(double (*f)(double), double lo, double hi, double dx) {
  GriddedFunction g;
  g.x0 = lo;
  g.dx = dx;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / dx)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    g.values.push_back(f(lo + dx * static_cast<double>(i)));
  }
  return g;
}

std::vector<WeightedSample> normal_samples(std::size_t n, std::uint64_t seed) {
  std::vector<WeightedSample> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    Philox rng(StreamKey{seed, 1, i});
    s[i] = {1.0, rng.normal()};
  }
  return s;
}

}  // namespace

TEST(Stencil, LowOrders) {
  EXPECT_EQ(make_stencil(1).coefficients, (std::vector<std::int64_t>{-1, 1}));
  EXPECT_EQ(make_stencil(2).coefficients, (std::vector<std::int64_t>{1, -2, 1}));
  EXPECT_EQ(make_stencil(3).coefficients, (std::vector<std::int64_t>{-1, 3, -3, 1}));
}

TEST(Stencil, RejectsOrderOutOfRange) {
  EXPECT_THROW(make_stencil(0), std::invalid_argument);
  EXPECT_THROW(make_stencil(21), std::invalid_argument);
  EXPECT_NO_THROW(make_stencil(20));
}

TEST(Stencil, DiscreteMomentIdentities) {
  for (int n = 1; n <= 8; ++n) {
    const auto st = make_stencil(n);
    std::int64_t factorial = 1;
    for (int k = 2; k <= n; ++k) {
      factorial *= k;
    }
    for (int m = 0; m <= n; ++m) {
      std::int64_t sum = 0;
      for (int j = 0; j <= n; ++j) {
        std::int64_t p = 1;
        for (int e = 0; e < m; ++e) {
          p *= j;
        }
        sum += st.coefficients[static_cast<std::size_t>(j)] * p;
      }
      EXPECT_EQ(sum, m < n ? 0 : factorial) << "n=" << n << " m=" << m;
    }
  }
}

TEST(FiniteDifference, KillsConstants) {
  for (int n = 1; n <= 6; ++n) {
    EXPECT_EQ(finite_difference([](double) { return 3.5; }, 0.7, 0.3, n), 0.0);
  }
}

TEST(FiniteDifference, ExactOnQuadratics) {
  auto sq = [](double x) { return x * x; };
  EXPECT_DOUBLE_EQ(finite_difference(sq, 0.0, 1.0, 2), 2.0);
  EXPECT_NEAR(finite_difference(sq, -1.3, 0.25, 2), 2.0 * 0.0625, 1e-14);
}

TEST(FiniteDifference, ComplexExponentialModulus) {
  for (double k : {0.5, 1.0, 3.0}) {
    for (double h : {0.1, 0.7}) {
      for (int n = 1; n <= 4; ++n) {
        const double x = 0.4;
        const double re = finite_difference([k](double y) { return std::cos(k * y); }, x, h, n);
        const double im = finite_difference([k](double y) { return std::sin(k * y); }, x, h, n);
        const double expected = std::pow(std::abs(2.0 * std::sin(0.5 * k * h)), n);
        EXPECT_NEAR(std::hypot(re, im), expected, 1e-12);
        const auto product = exp_difference(k, x, h, n);
        EXPECT_NEAR(product.real(), re, 1e-12);
        EXPECT_NEAR(product.imag(), im, 1e-12);
      }
    }
  }
}

TEST(FiniteDifference, CompositionMatchesHigherOrder) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> c(7);
    for (double& v : c) {
      v = coef(gen);
    }
    auto poly = [&c](double x) {
      double acc = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) {
        acc = acc * x + *it;
      }
      return acc;
    };
    const double h = 0.37;
    for (int n = 2; n <= 8; ++n) {
      auto lower = [&](double y) { return finite_difference(poly, y, h, n - 1); };
      const double composed = finite_difference(lower, 0.2, h, 1);
      const double direct = finite_difference(poly, 0.2, h, n);
      EXPECT_NEAR(composed, direct, 1e-11 * std::ldexp(1.0, n) * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(FiniteDifference, Linear) {
  auto f = [](double x) { return std::sin(x); };
  auto g = [](double x) { return x * x * x; };
  auto combo = [&](double x) { return 2.0 * f(x) - 3.0 * g(x); };
  const double lhs = finite_difference(combo, 0.3, 0.2, 3);
  const double rhs = 2.0 * finite_difference(f, 0.3, 0.2, 3) - 3.0 * finite_difference(g, 0.3, 0.2, 3);
  EXPECT_NEAR(lhs, rhs, 1e-14);
}

TEST(BesovNorm, GaussianDensity) {
  const auto f = sample_grid(gauss_pdf, -12.0, 12.0, 1.0 / 1024.0);
  const auto est = besov_norm_estimate(f, 0.5, 1, default_h_grid(10));
  EXPECT_NEAR(est.l1_norm, 1.0, 1e-6);
  EXPECT_GE(est.total, est.l1_norm);
  EXPECT_TRUE(std::isfinite(est.total));
  EXPECT_DOUBLE_EQ(est.total, est.l1_norm + est.sup_term);
}

TEST(BesovNorm, IndicatorClosedForm) {
  const auto f = sample_grid([](double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; }, -3.0,
                             4.0, 1.0 / 1024.0);
  const std::vector<double> h{0.5, 0.25, 0.125, 0.0625};
  const auto est = besov_norm_estimate(f, 0.9, 1, h);
  EXPECT_NEAR(est.sup_term, 2.0 * std::pow(0.5, 0.1), 1e-2);
}

TEST(BesovNorm, ZeroFunction) {
  GriddedFunction f{0.0, 0.01, std::vector<double>(500, 0.0)};
  EXPECT_EQ(besov_norm_estimate(f, 0.5, 1, default_h_grid(6)).total, 0.0);
}

TEST(BesovNorm, RejectsBadArguments) {
  GriddedFunction f{0.0, 0.01, std::vector<double>(500, 1.0)};
  EXPECT_THROW(besov_norm_estimate(f, 1.0, 1, default_h_grid(6)), std::invalid_argument);
  EXPECT_THROW(besov_norm_estimate(f, 0.5, 1, {}), std::invalid_argument);
}

TEST(BesovNorm, RefinementNeverDecreasesSupTerm) {
  const auto f = sample_grid(gauss_pdf, -10.0, 10.0, 1.0 / 512.0);
  const std::vector<double> coarse{1.0, 0.25, 0.0625};
  const std::vector<double> fine{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
  const auto a = besov_norm_estimate(f, 0.7, 1, coarse);
  const auto b = besov_norm_estimate(f, 0.7, 1, fine);
  EXPECT_GE(b.sup_term, a.sup_term);
}

TEST(BesovNorm, DifferenceBoundedByDerivative) {
  // ||Delta_h^n f||_1 <= h^n ||f^(n)||_1 for the Gaussian density, n = 1, 2.
  const auto f = sample_grid(gauss_pdf, -12.0, 12.0, 1.0 / 1024.0);
  const double d1 = 2.0 * gauss_pdf(0.0);                         // ||phi'||_1
  const double d2 = 4.0 * gauss_pdf(1.0);                         // ||phi''||_1
  for (double h : {0.5, 0.125, 0.03125}) {
    const std::vector<double> one{h};
    const auto e1 = besov_norm_estimate(f, 0.0001, 1, one);
    const auto e2 = besov_norm_estimate(f, 0.0001, 2, one);
    const double l1_first = e1.sup_term * std::pow(h, 0.0001);
    const double l1_second = e2.sup_term * std::pow(h, 0.0001);
    EXPECT_LE(l1_first, h * d1 * (1.0 + 1e-6));
    EXPECT_LE(l1_second, h * h * d2 * (1.0 + 1e-6));
  }
}

TEST(CriterionStatistic, GaussianOracle) {
  const auto samples = normal_samples(20000, 3);
  const auto h = default_h_grid(12);
  for (double k : {0.5, 1.0, 2.0}) {
    const auto cs = criterion_statistic(samples, 1, h, TestFunction{k, false}, 0.5);
    ASSERT_EQ(cs.stat_values.size(), h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double oracle = std::exp(-0.5 * k * k) * std::abs(2.0 * std::sin(0.5 * k * h[i])) /
                            holder_norm(k, 0.5);
      EXPECT_LE(std::abs(cs.stat_values[i] - oracle), 5.0 * cs.stat_stderr[i] + 1e-15);
    }
    ASSERT_TRUE(cs.fitted_exponent.ok());
    EXPECT_NEAR(cs.fitted_exponent.slope, 1.0, 0.02);
  }
}

TEST(CriterionStatistic, DiracLawSinePartDecaysLinearly) {
  std::vector<WeightedSample> dirac(1000, WeightedSample{1.0, 0.0});
  const auto cs = criterion_statistic(dirac, 1, default_h_grid(12), TestFunction{1.0, false}, 0.5);
  ASSERT_TRUE(cs.fitted_exponent.ok());
  EXPECT_NEAR(cs.fitted_exponent.slope, 1.0, 1e-3);
  // At the resonant frequency the statistic does not decay at all.
  CriterionOptions options;
  const auto report = criterion_family(dirac, options);
  EXPECT_FALSE(report.density_verdict);
}

TEST(CriterionStatistic, ConstantTestFunctionGivesZero) {
  const auto samples = normal_samples(200, 5);
  const auto cs = criterion_statistic(samples, 1, default_h_grid(8), TestFunction{0.0, false}, 0.5);
  for (double v : cs.stat_values) {
    EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(cs.fitted_exponent.flag, mc::FitFlag::degenerate);
}

TEST(CriterionStatistic, ValidatesInputs) {
  const auto samples = normal_samples(50, 6);
  const std::vector<double> increasing{0.1, 0.2, 0.3};
  EXPECT_THROW(criterion_statistic(samples, 1, increasing, TestFunction{1.0, false}, 0.5),
               std::invalid_argument);
  EXPECT_THROW(criterion_statistic({}, 1, default_h_grid(4), TestFunction{1.0, false}, 0.5),
               std::invalid_argument);
  std::vector<WeightedSample> bad{{std::nan(""), 0.0}};
  EXPECT_THROW(criterion_statistic(bad, 1, default_h_grid(4), TestFunction{1.0, false}, 0.5),
               std::invalid_argument);
}

TEST(CriterionStatistic, HValuesStrictlyDecreasing) {
  const auto cs =
      criterion_statistic(normal_samples(100, 9), 1, default_h_grid(16), TestFunction{1.0, false}, 0.5);
  for (std::size_t i = 1; i < cs.h_values.size(); ++i) {
    EXPECT_LT(cs.h_values[i], cs.h_values[i - 1]);
  }
}
