#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "ambitlab/montecarlo.hpp"
#include "ambitlab/spde.hpp"

using namespace ambitlab;
using namespace ambitlab::spde;

namespace {

constexpr double pi = std::numbers::pi;

SpdeProblem heat_problem(Coefficient sigma, double u0 = 0.0) {
  SpdeProblem p;
  p.noise.kind = noise::NoiseKind::white;
  p.op = Operator::heat;
  p.grid = noise::Grid{1, 256, 8.0};
  p.coeffs.sigma = sigma;
  p.coeffs.b = Coefficient::constant(0.0);
  p.t_end = 0.1;
  p.dt = 0.1 / 128.0;
  p.u0 = u0;
  return p;
}

std::vector<double> final_values(const SpdeSolver& solver, std::size_t n, std::uint64_t seed) {
  EnsembleOptions options;
  options.n_paths = n;
  options.seed = seed;
  options.experiment = 77;
  const auto traces = simulate_traces(solver, options);
  std::vector<double> out;
  for (const auto& tr : traces) {
    out.push_back(tr.back());
  }
  return out;
}

double fourth_moment(const std::vector<double>& v, double& se) {
  std::vector<double> m4;
  for (double x : v) {
    m4.push_back(x * x * x * x);
  }
  const auto e = mc::mean_estimate(m4);
  se = e.std_error;
  return e.value;
}

}  // namespace

TEST(Coefficient, ParseFamilies) {
  const auto c = Coefficient::parse("affine:1,2");
  EXPECT_DOUBLE_EQ(c(3.0), 7.0);
  EXPECT_DOUBLE_EQ(c.lipschitz(), 2.0);
  EXPECT_DOUBLE_EQ(Coefficient::parse("linear:0.5")(4.0), 2.0);
  EXPECT_NEAR(Coefficient::parse("sine:2,3")(0.1), 2.0 * std::sin(0.3), 1e-15);
  EXPECT_TRUE(Coefficient::parse("const:1.5").is_constant());
  EXPECT_THROW(Coefficient::parse("cubic:1"), std::invalid_argument);
  EXPECT_THROW(Coefficient::parse("affine:1"), std::invalid_argument);
  EXPECT_THROW(Coefficient::parse("const:x"), std::invalid_argument);
}

TEST(Solver, RejectsCflViolation) {
  auto p = heat_problem(Coefficient::constant(1.0));
  p.dt = 0.1 / 64.0;
  EXPECT_THROW(SpdeSolver{p}, std::invalid_argument);
}

TEST(Solver, ConstantSolutionWithoutNoise) {
  const SpdeSolver solver(heat_problem(Coefficient::constant(0.0), 1.25));
  const auto tr = solver.trace(StreamKey{1, 2, 3});
  ASSERT_EQ(tr.size(), solver.steps() + 1);
  for (double v : tr) {
    EXPECT_NEAR(v, 1.25, 1e-10);
  }
}

TEST(Solver, AdditiveHeatVariance) {
  const SpdeSolver solver(heat_problem(Coefficient::constant(1.0)));
  const auto v = final_values(solver, 2000, 5);
  const auto var = mc::variance_estimate(v);
  EXPECT_LE(std::abs(var.value - std::sqrt(2.0 * pi * 0.1)), 5.0 * var.std_error);
}

TEST(Solver, AdditiveSolutionIsGaussian) {
  const SpdeSolver solver(heat_problem(Coefficient::constant(1.0)));
  const auto v = final_values(solver, 2000, 6);
  const auto sk = mc::skewness_estimate(v);
  EXPECT_LE(std::abs(sk.value), 5.0 * sk.std_error);
}

TEST(Solver, AndersonMeanIsPreserved) {
  const SpdeSolver solver(heat_problem(Coefficient::linear(1.0), 1.0));
  const auto v = final_values(solver, 2000, 7);
  const auto m = mc::mean_estimate(v);
  EXPECT_LE(std::abs(m.value - 1.0), 5.0 * m.std_error);
}

TEST(Solver, AndersonFourthMomentStableUnderStepHalving) {
  auto coarse = heat_problem(Coefficient::linear(1.0), 1.0);
  auto fine = coarse;
  fine.dt = 0.5 * coarse.dt;
  double se_c = 0.0, se_f = 0.0;
  const double mc4 = fourth_moment(final_values(SpdeSolver(coarse), 2000, 8), se_c);
  const double mf4 = fourth_moment(final_values(SpdeSolver(fine), 2000, 9), se_f);
  EXPECT_LE(std::abs(mc4 - mf4), 5.0 * std::hypot(se_c, se_f));
}

TEST(Solver, SpatialStationarity) {
  const SpdeSolver solver(heat_problem(Coefficient::constant(1.0)));
  const std::vector<double> at{0.1};
  std::vector<double> left, middle;
  for (std::size_t p = 0; p < 1500; ++p) {
    const auto sol = solver.solve(StreamKey{10, 1, p}, at);
    left.push_back(sol.states[0][0]);
    middle.push_back(sol.states[0][sol.grid.m / 2]);
  }
  EXPECT_GT(mc::ks_two_sample(left, middle).p_value, 0.01);
}

TEST(Solver, DeterministicPerKey) {
  const SpdeSolver solver(heat_problem(Coefficient::linear(0.5), 1.0));
  EXPECT_EQ(solver.trace(StreamKey{3, 3, 3}), solver.trace(StreamKey{3, 3, 3}));
  EXPECT_NE(solver.trace(StreamKey{3, 3, 3}), solver.trace(StreamKey{3, 3, 4}));
}

TEST(Delta, DegenerateWithoutNoise) {
  const SpdeSolver solver(heat_problem(Coefficient::constant(0.0), 2.0));
  EnsembleOptions options;
  options.n_paths = 20;
  const auto traces = simulate_traces(solver, options);
  const std::vector<double> lags{0.1 / 128, 0.1 / 64, 0.1 / 32, 0.1 / 16, 0.1 / 8};
  const auto fit = time_holder_delta(traces, solver.problem().dt, lag_pairs(0.1, lags));
  EXPECT_EQ(fit.fit.flag, mc::FitFlag::degenerate);
}

TEST(Delta, AdditiveHeatSlopeIsOneHalf) {
  const SpdeSolver solver(heat_problem(Coefficient::constant(1.0)));
  EnsembleOptions options;
  options.n_paths = 2000;
  options.seed = 12;
  const auto traces = simulate_traces(solver, options);
  const std::vector<double> lags{0.1 / 64, 0.1 / 32, 0.1 / 16, 0.1 / 8, 0.1 / 4};
  const auto fit = time_holder_delta(traces, solver.problem().dt, lag_pairs(0.1, lags));
  EXPECT_NEAR(fit.fit.slope, 0.5, 0.05);
}

TEST(Delta, RejectsTooFewLags) {
  const std::vector<std::vector<double>> traces{{0.0, 1.0, 2.0}};
  const std::vector<double> lags{0.01, 0.02};
  EXPECT_THROW(time_holder_delta(traces, 0.01, lag_pairs(0.02, lags)), std::invalid_argument);
}

TEST(GammaBar, Examples) {
  const auto heat = gammabar(0.5, 0.5, 1.0, 0.5);
  EXPECT_DOUBLE_EQ(heat.value, 2.0);
  EXPECT_TRUE(heat.verdict);
  EXPECT_DOUBLE_EQ(heat.order_upper, 1.0);
  const auto wave = gammabar(2.0, 2.0, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(wave.value, 1.5);
  EXPECT_TRUE(wave.verdict);
  const auto rough = gammabar(0.5, 0.5, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(rough.value, 1.0);
  EXPECT_FALSE(rough.verdict);
  EXPECT_THROW(gammabar(0.0, 0.5, 1.0, 0.5), std::invalid_argument);
}

TEST(Approximation, ExactForConstantCoefficients) {
  const SpdeSolver solver(heat_problem(Coefficient::constant(0.7), 0.3));
  const std::vector<double> eps{0.1 / 128, 0.1 / 16, 0.1 / 2};
  const auto ap = solver.approximate(StreamKey{4, 4, 4}, 0.1, eps);
  ASSERT_EQ(ap.size(), eps.size());
  for (const auto& a : ap) {
    EXPECT_NEAR(a.u_eps, a.u, 1e-10);
  }
}

TEST(Approximation, MatchesStoredPath) {
  const SpdeSolver solver(heat_problem(Coefficient::linear(1.0), 1.0));
  const StreamKey key{5, 5, 5};
  const std::vector<double> eps{0.1 / 32};
  const auto ap = solver.approximate(key, 0.1, eps);
  const auto tr = solver.trace(key);
  EXPECT_DOUBLE_EQ(ap[0].u, tr.back());
  EXPECT_DOUBLE_EQ(ap[0].u_prev, tr[tr.size() - 1 - 4]);
}

TEST(Approximation, RejectsEpsOutsideRange) {
  const SpdeSolver solver(heat_problem(Coefficient::linear(1.0), 1.0));
  EXPECT_THROW(solver.approximate(StreamKey{}, 0.1, std::vector<double>{0.1}), std::invalid_argument);
  EXPECT_THROW(solver.approximate(StreamKey{}, 0.1, std::vector<double>{0.0}), std::invalid_argument);
  EXPECT_THROW(solver.approximate(StreamKey{}, 0.1, std::vector<double>{0.2}), std::invalid_argument);
}

TEST(Density, ZeroCoefficientIsDegenerate) {
  const std::vector<double> v(200, 1.0);
  besov::CriterionOptions options;
  EXPECT_THROW(density_criterion_experiment(v, Coefficient::constant(0.0), options),
               std::domain_error);
}

TEST(Density, AdditiveHeatHasDensity) {
  const SpdeSolver solver(heat_problem(Coefficient::constant(1.0)));
  const auto v = final_values(solver, 4000, 14);
  besov::CriterionOptions options;
  options.include_resonant = false;
  options.frequencies = {0.5, 1.0, 2.0};
  const auto report = density_criterion_experiment(v, Coefficient::constant(1.0), options);
  EXPECT_TRUE(report.density_verdict);
}
