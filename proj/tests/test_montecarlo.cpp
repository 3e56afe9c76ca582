#include <bit>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "ambitlab/montecarlo.hpp"
#include "ambitlab/rng.hpp"

using namespace ambitlab;
using namespace ambitlab::mc;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, std::uint64_t experiment = 1) {
  return run_paths(n, 1, seed, experiment, [](Philox& rng, std::size_t) { return rng.normal(); });
}

}  // namespace

TEST(FitScaling, ExactPowerLaw) {
  const std::vector<double> x{0.1, 0.2, 0.4, 0.8};
  std::vector<double> y;
  for (double v : x) {
    y.push_back(3.0 * v * v);
  }
  const auto fit = fit_scaling(x, y);
  EXPECT_TRUE(fit.ok());
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 3.0, 1e-12);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
  EXPECT_EQ(fit.points_used, 4u);
}

TEST(FitScaling, NoisySquareRoot) {
  Philox rng(StreamKey{11, 2, 0});
  const auto x = geometric_grid(1e-3, 1.0, 30);
  std::vector<double> y;
  for (double v : x) {
    y.push_back(std::sqrt(v) * std::exp(0.02 * rng.normal()));
  }
  const auto fit = fit_scaling(x, y);
  EXPECT_NEAR(fit.slope, 0.5, 0.02);
  EXPECT_GT(fit.ci_halfwidth, 0.0);
  EXPECT_LE(std::abs(fit.slope - 0.5), fit.ci_halfwidth + 0.01);
}

TEST(FitScaling, RejectsBadInput) {
  const std::vector<double> y{1.0, 2.0, 3.0, 4.0};
  EXPECT_THROW(fit_scaling(std::vector<double>{1.0, 1.0, 2.0, 3.0}, y), std::invalid_argument);
  EXPECT_THROW(fit_scaling(std::vector<double>{1.0, 3.0, 2.0, 4.0}, y), std::invalid_argument);
  EXPECT_THROW(fit_scaling(std::vector<double>{1.0, 2.0, 3.0}, std::vector<double>{1.0, 2.0, 3.0}),
               std::invalid_argument);
  EXPECT_THROW(fit_scaling(std::vector<double>{1.0, 2.0, 3.0, 4.0},
                           std::vector<double>{1.0, -2.0, 3.0, 4.0}),
               std::invalid_argument);
}

TEST(FitScaling, DecreasingAbscissaeAccepted) {
  const std::vector<double> x{0.8, 0.4, 0.2, 0.1};
  std::vector<double> y;
  for (double v : x) {
    y.push_back(v);
  }
  EXPECT_NEAR(fit_scaling(x, y).slope, 1.0, 1e-12);
}

TEST(FitScaling, AllZeroIsDegenerate) {
  const std::vector<double> x{0.1, 0.2, 0.4, 0.8};
  const std::vector<double> y(4, 0.0);
  EXPECT_EQ(fit_scaling(x, y).flag, FitFlag::degenerate);
}

TEST(FitScaling, LowR2Flagged) {
  const std::vector<double> x{0.1, 0.2, 0.4, 0.8, 1.6};
  const std::vector<double> y{1.0, 3.0, 0.5, 2.0, 1.0};
  const auto fit = require_r2(fit_scaling(x, y), 0.99);
  EXPECT_EQ(fit.flag, FitFlag::inconclusive);
}

TEST(Summaries, MeanVarianceSkewness) {
  const auto v = normals(40000, 3);
  const auto m = mean_estimate(v);
  EXPECT_LE(std::abs(m.value), 5.0 * m.std_error);
  EXPECT_NEAR(m.std_error, 1.0 / std::sqrt(40000.0), 2e-4);
  const auto var = variance_estimate(v);
  EXPECT_LE(std::abs(var.value - 1.0), 5.0 * var.std_error);
  const auto sk = skewness_estimate(v);
  EXPECT_LE(std::abs(sk.value), 5.0 * sk.std_error);
}

TEST(Summaries, CompensatedSum) {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) {
    s.add(1.0);
  }
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1000.0);
}

TEST(Rng, UniformOpenInterval) {
  Philox rng(StreamKey{1, 2, 3});
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, StreamsDependOnlyOnKey) {
  Philox a(StreamKey{5, 6, 7});
  Philox b(StreamKey{5, 6, 7});
  Philox c(StreamKey{5, 6, 8});
  Philox d(StreamKey{5, 7, 7});
  bool differs_path = false;
  bool differs_experiment = false;
  for (int i = 0; i < 16; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    differs_path |= va != c();
    differs_experiment |= va != d();
  }
  EXPECT_TRUE(differs_path);
  EXPECT_TRUE(differs_experiment);
}

TEST(Rng, HashName) {
  EXPECT_EQ(hash_name(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hash_name("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  auto path = [](Philox& rng, std::size_t i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 50 + i % 7; ++k) {
      acc += rng.normal() * rng.uniform();
    }
    return acc;
  };
  const auto one = run_paths(1000, 1, 42, 9, path);
  for (unsigned w : {4u, 16u}) {
    const auto many = run_paths(1000, w, 42, 9, path);
    ASSERT_EQ(many.size(), one.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
      ASSERT_EQ(std::bit_cast<std::uint64_t>(many[i]), std::bit_cast<std::uint64_t>(one[i]));
    }
    EXPECT_EQ(mean_estimate(many).value, mean_estimate(one).value);
  }
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i, unsigned) {
                              if (i == 57) {
                                throw std::runtime_error("boom");
                              }
                            }),
               std::runtime_error);
}

TEST(Parallel, ResolveWorkers) {
  EXPECT_EQ(resolve_workers(3), 3u);
}

TEST(EmpiricalCf, MatchesGaussian) {
  const auto v = normals(20000, 8);
  const std::vector<double> xi{0.0, 0.5, 1.0, 2.0};
  const auto cf = empirical_cf(v, xi);
  ASSERT_EQ(cf.size(), xi.size());
  EXPECT_DOUBLE_EQ(cf[0].re, 1.0);
  EXPECT_DOUBLE_EQ(cf[0].im, 0.0);
  for (const auto& p : cf) {
    const double oracle = std::exp(-0.5 * p.xi * p.xi);
    EXPECT_LE(std::abs(p.re - oracle), 5.0 * p.se_re + 1e-12);
    EXPECT_LE(std::abs(p.im), 5.0 * p.se_im + 1e-12);
  }
}

TEST(KernelDensity, RecoversNormal) {
  const auto v = normals(50000, 12);
  const auto kd = kernel_density(v);
  ASSERT_FALSE(kd.degenerate);
  EXPECT_NEAR(kd.integral(), 1.0, 1e-3);
  double max_err = 0.0;
  for (std::size_t i = 0; i < kd.values.size(); ++i) {
    const double x = kd.x(i);
    const double oracle = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    max_err = std::max(max_err, std::abs(kd.values[i] - oracle));
  }
  EXPECT_LT(max_err, 0.02);
}

TEST(KernelDensity, SymmetricSampleGivesSymmetricEstimate) {
  auto v = normals(5000, 13);
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    v.push_back(-v[i]);
  }
  const auto kd = kernel_density(v);
  auto at = [&kd](double x) {
    const double pos = (x - kd.x0) / kd.dx;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * kd.values[i] + w * kd.values[i + 1];
  };
  for (double x = 0.05; x < 4.0; x += 0.1) {
    EXPECT_NEAR(at(x), at(-x), 2e-3);
  }
}

TEST(KernelDensity, ConstantSampleIsDegenerate) {
  const std::vector<double> v(500, 2.5);
  EXPECT_TRUE(kernel_density(v).degenerate);
}

TEST(KernelDensity, TooFewSamplesThrows) {
  EXPECT_THROW(kernel_density(std::vector<double>(10, 1.0)), std::invalid_argument);
}

TEST(KolmogorovSmirnov, SameLawAccepted) {
  const auto a = normals(5000, 20);
  const auto b = normals(5000, 21);
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}

TEST(KolmogorovSmirnov, ShiftedLawRejected) {
  const auto a = normals(5000, 20);
  auto b = normals(5000, 21);
  for (double& x : b) {
    x += 0.2;
  }
  EXPECT_LT(ks_two_sample(a, b).p_value, 1e-6);
}

TEST(Grids, GeometricGrid) {
  const auto g = geometric_grid(1.0, 1e-3, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_NEAR(g[0], 1.0, 1e-15);
  EXPECT_NEAR(g[1], 0.1, 1e-15);
  EXPECT_NEAR(g[3], 1e-3, 1e-15);
}

TEST(Quantiles, StudentT) {
  EXPECT_NEAR(student_t_quantile(0.975, 10.0), 2.228138851986, 1e-6);
  EXPECT_NEAR(student_t_quantile(0.975, 1e6), 1.959966, 1e-4);
}
