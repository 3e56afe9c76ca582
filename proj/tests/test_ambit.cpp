#include <bit>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "ambitlab/ambit.hpp"
#include "ambitlab/levy.hpp"
#include "ambitlab/montecarlo.hpp"

using namespace ambitlab;
using namespace ambitlab::ambit;

namespace {

levy::LevyBasisModel stable(double alpha) {
  levy::LevyBasisModel m;
  m.alpha = alpha;
  return m;
}

AmbitSpec cone_spec() {
  AmbitSpec s;
  s.A = {1.0, 1.0};
  s.g = Kernel::constant(1.0);
  s.sigma = holder::FieldSpec::constant(1.0);
  return s;
}

AmbitSpec reference_spec() {
  AmbitSpec s;
  s.A = {1.0, 1.0};
  s.g = Kernel::parse("power:1,0.6764705882352942");
  s.sigma = holder::FieldSpec::parse("expfbm:1,0.5,0.5,0.5");
  s.delta1 = 0.5;
  s.delta2 = 0.5;
  return s;
}

AmbitSpec slab_spec(double half_width) {
  AmbitSpec s;
  s.A = {half_width, 0.0};
  s.g = Kernel::constant(1.0);
  s.sigma = holder::FieldSpec::constant(1.0);
  return s;
}

Discretization small_disc() {
  Discretization d;
  d.time_cells = 64;
  d.space_cells = 32;
  d.jumps_per_row = 32.0;
  return d;
}

}  // namespace

TEST(Kernel, ParseAndEvaluate) {
  const auto p = Kernel::parse("power:2,0.5");
  EXPECT_NEAR(p(1.0, 0.75, 0.0, 3.0), 4.0, 1e-14);
  const auto g = Kernel::parse("gauss:1,2");
  EXPECT_NEAR(g(1.0, 0.0, 0.0, 2.0), std::exp(-0.5), 1e-15);
  EXPECT_DOUBLE_EQ(Kernel::parse("const:3")(1.0, 0.2, 0.0, 9.0), 3.0);
  EXPECT_TRUE(Kernel::parse("const:0").is_zero());
  EXPECT_THROW(Kernel::parse("power:1,1"), std::invalid_argument);
  EXPECT_THROW(Kernel::parse("gauss:1,0"), std::invalid_argument);
  EXPECT_THROW(Kernel::parse("bessel:1"), std::invalid_argument);
  EXPECT_THROW(Kernel::parse("const"), std::invalid_argument);
}

TEST(ConeSet, HalfWidthAndValidation) {
  const ConeSet a{2.0, 0.5};
  EXPECT_NEAR(a.half_width(1.0, 0.75), 1.0, 1e-15);
  EXPECT_THROW((ConeSet{0.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((ConeSet{1.0, -1.0}.validate()), std::invalid_argument);
}

TEST(AmbitSpec, RejectsRougherFieldThanDeclared) {
  auto s = reference_spec();
  s.delta1 = 0.6;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.delta1 = 0.5;
  EXPECT_NO_THROW(s.validate());
}

TEST(Defaults, BetaGammaInsideAdmissibleRange) {
  for (double a : {0.3, 1.0, 1.2, 1.9}) {
    EXPECT_GT(default_beta(a), 0.0);
    EXPECT_LT(default_beta(a), a);
    EXPECT_GT(default_gamma(a), a);
    EXPECT_LE(default_gamma(a), 2.0);
  }
  EXPECT_NEAR(default_gamma(1.2), 1.7, 1e-15);
}

TEST(Exponents, ConeClosedForms) {
  const auto eps = mc::geometric_grid(0.01, 0.1, 6);
  const auto b = exponent_conditions(cone_spec(), stable(1.2), 1.0, 0.0, eps, 0.8, 1.7);
  EXPECT_NEAR(b.gamma0.slope, 2.0, 0.01);
  EXPECT_NEAR(b.gamma1_bar.slope, 2.0 / 1.7, 0.01);
  EXPECT_NEAR(b.gamma1.slope, b.gamma1_bar.slope + 0.5, 0.02);
  EXPECT_NEAR(b.gamma2.slope, b.gamma1_bar.slope + 0.5 * 1.0, 0.02);
  EXPECT_EQ(b.gamma3.flag, mc::FitFlag::degenerate);
  EXPECT_TRUE(std::isinf(b.gamma3.slope));
}

TEST(Exponents, SpaceRuleScalesWithZeta) {
  auto s = cone_spec();
  s.A.zeta = 0.5;
  const auto eps = mc::geometric_grid(0.01, 0.1, 6);
  const auto b = exponent_conditions(s, stable(1.2), 1.0, 0.0, eps, 0.8, 1.7);
  EXPECT_NEAR(b.gamma0.slope, 1.5, 0.01);
  EXPECT_NEAR(b.gamma2.slope, b.gamma1_bar.slope + 0.5 * 0.5, 0.02);
}

TEST(Exponents, InvariantUnderConeWidthScaling) {
  const auto eps = mc::geometric_grid(0.01, 0.1, 6);
  auto wide = reference_spec();
  wide.A.c = 2.0;
  const auto a = exponent_conditions(reference_spec(), stable(1.2), 1.0, 0.0, eps, 0.8, 1.7);
  const auto b = exponent_conditions(wide, stable(1.2), 1.0, 0.0, eps, 0.8, 1.7);
  EXPECT_NEAR(a.gamma0.slope, b.gamma0.slope, 0.01);
  EXPECT_NEAR(a.gamma1.slope, b.gamma1.slope, 0.01);
  EXPECT_NEAR(a.gamma2.slope, b.gamma2.slope, 0.01);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_NEAR(b.lower[i] / a.lower[i], 2.0, 1e-6);
  }
}

TEST(Exponents, ReferenceSpecVerdict) {
  const auto eps = mc::geometric_grid(0.01, 0.1, 6);
  const auto b = exponent_conditions(reference_spec(), stable(1.2), 1.0, 0.0, eps, 0.8, 1.7);
  EXPECT_NEAR(b.gamma0.slope, 2.0 - 0.6764705882352942 * 1.2, 0.01);
  EXPECT_NEAR(b.gammabar, 1.0, 0.02);
  EXPECT_TRUE(b.verdict);
}

TEST(Exponents, RejectsBadArguments) {
  const auto eps = mc::geometric_grid(0.01, 0.1, 6);
  EXPECT_THROW(exponent_conditions(cone_spec(), stable(1.2), 1.0, 0.0, eps, 1.3, 1.7),
               std::invalid_argument);
  EXPECT_THROW(exponent_conditions(cone_spec(), stable(1.2), 1.0, 0.0, eps, 0.8, 1.1),
               std::invalid_argument);
  const std::vector<double> beyond{0.1, 0.2, 0.5, 2.0};
  EXPECT_THROW(exponent_conditions(cone_spec(), stable(1.2), 1.0, 0.0, beyond, 0.8, 1.7),
               std::invalid_argument);
}

TEST(Evaluator, DriftOnlyField) {
  AmbitSpec s = slab_spec(0.5);
  s.g = Kernel::constant(0.0);
  s.B = {0.5, 0.0};
  s.h = Kernel::constant(1.0);
  s.b = holder::FieldSpec::constant(2.0);
  s.x0 = 0.3;
  const AmbitEvaluator ev(s, stable(1.2), 0.7, 0.0, small_disc());
  Philox rng(StreamKey{1, 1, 1});
  EXPECT_NEAR(ev.evaluate(ev.draw(rng)), 0.3 + 2.0 * 0.7, 1e-8);
}

TEST(Evaluator, ZeroVolatilityGivesInitialValue) {
  AmbitSpec s = reference_spec();
  s.sigma = holder::FieldSpec::constant(0.0);
  s.x0 = -1.5;
  const AmbitEvaluator ev(s, stable(1.2), 1.0, 0.0, small_disc());
  for (std::size_t p = 0; p < 20; ++p) {
    Philox rng(StreamKey{2, 2, p});
    EXPECT_DOUBLE_EQ(ev.evaluate(ev.draw(rng)), -1.5);
  }
}

TEST(Evaluator, ConstantVolatilityHasNoGap) {
  const AmbitEvaluator ev(slab_spec(0.5), stable(1.2), 1.0, 0.0, small_disc());
  for (std::size_t p = 0; p < 20; ++p) {
    Philox rng(StreamKey{3, 3, p});
    const auto rec = ev.draw(rng);
    for (double eps : {1.0 / 64, 0.25, 1.0}) {
      const auto pv = ev.evaluate_pair(rec, eps);
      EXPECT_EQ(pv.gap, 0.0);
      EXPECT_EQ(pv.coupling_bound, 0.0);
      EXPECT_NEAR(pv.x, pv.x_eps, 1e-12 * std::max(1.0, std::abs(pv.x)));
    }
  }
}

TEST(Evaluator, EpsRange) {
  const AmbitEvaluator ev(reference_spec(), stable(1.2), 1.0, 0.0, small_disc());
  Philox rng(StreamKey{4, 4, 4});
  const auto rec = ev.draw(rng);
  EXPECT_THROW(ev.evaluate_pair(rec, 1.5), std::invalid_argument);
  EXPECT_THROW(ev.evaluate_pair(rec, 0.0), std::invalid_argument);
  EXPECT_THROW(evaluate_approx(ev, rec, -0.1), std::invalid_argument);
  const auto whole = ev.evaluate_pair(rec, 1.0);
  EXPECT_EQ(ev.slab_rows(1.0), ev.rows());
  EXPECT_DOUBLE_EQ(whole.u_eps, ev.spec().x0);
}

TEST(Evaluator, HistoryIgnoresSlabNoise) {
  const AmbitEvaluator ev(reference_spec(), stable(1.2), 1.0, 0.0, small_disc());
  for (std::size_t p = 0; p < 20; ++p) {
    Philox rng(StreamKey{5, 5, p});
    const auto rec = ev.draw(rng);
    for (double eps : {1.0 / 64, 0.125, 0.5}) {
      const auto erased = ev.erase_slab(rec, eps);
      EXPECT_EQ(std::bit_cast<std::uint64_t>(ev.u_eps(rec, eps)),
                std::bit_cast<std::uint64_t>(ev.u_eps(erased, eps)));
      EXPECT_LE(erased.jumps.size(), rec.jumps.size());
    }
  }
}

TEST(Evaluator, CouplingInequality) {
  const AmbitEvaluator ev(reference_spec(), stable(1.2), 1.0, 0.0, small_disc());
  for (std::size_t p = 0; p < 100; ++p) {
    Philox rng(StreamKey{6, 6, p});
    const auto rec = ev.draw(rng);
    for (double eps : {1.0 / 32, 0.125, 0.5}) {
      const auto pv = ev.evaluate_pair(rec, eps);
      EXPECT_NEAR(pv.x - pv.x_eps, pv.gap, 1e-9 * (1.0 + std::abs(pv.x)));
      EXPECT_LE(std::abs(pv.gap), pv.coupling_bound * (1.0 + 1e-12) + 1e-12);
    }
  }
}

TEST(Evaluator, StableSlabCharacteristicFunction) {
  // sigma = g = 1 on a slab of half-width c over [0, t]: a symmetric stable law with
  // Re Psi(xi) = 2 c t (c_plus + c_minus) K_alpha |xi|^alpha.
  const double alpha = 1.2, c = 0.5, t = 1.0;
  EnsembleOptions options;
  options.n_paths = 20000;
  options.seed = 7;
  Discretization disc;
  disc.time_cells = 16;
  disc.space_cells = 4;
  disc.jumps_per_row = 64.0;
  const auto x = simulate_values(slab_spec(c), stable(alpha), t, 0.0, options, disc);
  const std::vector<double> xi{0.2, 0.5, 1.0};
  for (const auto& p : mc::empirical_cf(x, xi)) {
    const double oracle = std::exp(-2.0 * c * t * 2.0 * levy::k_alpha(alpha) * std::pow(p.xi, alpha));
    EXPECT_LE(std::abs(p.re - oracle), 5.0 * p.se_re + 1e-3) << "xi=" << p.xi;
    EXPECT_LE(std::abs(p.im), 5.0 * p.se_im + 1e-3) << "xi=" << p.xi;
  }
}

TEST(Evaluator, DeterministicAcrossWorkers) {
  EnsembleOptions options;
  options.n_paths = 64;
  options.seed = 8;
  const auto one = simulate_values(reference_spec(), stable(1.2), 1.0, 0.0, options, small_disc());
  options.workers = 4;
  const auto four = simulate_values(reference_spec(), stable(1.2), 1.0, 0.0, options, small_disc());
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(one[i]), std::bit_cast<std::uint64_t>(four[i]));
  }
}

TEST(Decay, DegenerateForConstantVolatility) {
  EnsembleOptions options;
  options.n_paths = 20;
  const auto eps = mc::geometric_grid(1.0 / 32, 0.5, 5);
  const auto d = error_decay(slab_spec(0.5), stable(1.2), 1.0, 0.0, 0.8, eps, options, small_disc());
  EXPECT_EQ(d.fit.flag, mc::FitFlag::degenerate);
  for (double m : d.moments) {
    EXPECT_EQ(m, 0.0);
  }
}

TEST(Decay, RejectsCollidingEps) {
  EnsembleOptions options;
  options.n_paths = 4;
  const std::vector<double> eps{0.1, 0.1001, 0.2, 0.4};
  EXPECT_THROW(error_decay(reference_spec(), stable(1.2), 1.0, 0.0, 0.8, eps, options, small_disc()),
               std::invalid_argument);
}

TEST(ContinuityBound, SlabMomentDecaysNoSlowerThanBound) {
  // E|slab integral|^beta against eps must fall at least as fast as
  // eps^(beta/alpha - 1) (quadrature of C~ |g|^gamma)^(beta/gamma).
  const double alpha = 1.2, beta = 0.8, gamma = 1.7;
  const auto spec = reference_spec();
  const auto model = stable(alpha);
  const AmbitEvaluator ev(spec, model, 1.0, 0.0, small_disc());
  const std::vector<double> eps{2.0 / 64, 4.0 / 64, 8.0 / 64, 16.0 / 64, 32.0 / 64};
  std::vector<std::vector<double>> moments(eps.size(), std::vector<double>(1000));
  for (std::size_t p = 0; p < 1000; ++p) {
    Philox rng(StreamKey{9, 9, p});
    const auto rec = ev.draw(rng);
    const auto sums = ev.sums(rec);
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const auto pv = ev.pair_from(rec, sums, ev.slab_rows(eps[e]));
      moments[e][p] = std::pow(std::abs(pv.x - pv.u_eps), beta);
    }
  }
  std::vector<double> mean, se;
  for (const auto& m : moments) {
    const auto est = mc::mean_estimate(m);
    mean.push_back(est.value);
    se.push_back(est.std_error);
  }
  const auto mc_fit = mc::fit_scaling(eps, mean, se);
  const auto b = exponent_conditions(spec, model, 1.0, 0.0, eps, beta, gamma);
  std::vector<double> bound;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    bound.push_back(std::pow(eps[e], beta / alpha - 1.0) * std::pow(b.plain[e], beta / gamma));
  }
  const auto bound_fit = mc::fit_scaling(eps, bound);
  EXPECT_GE(mc_fit.slope, bound_fit.slope - 0.1);
  // A single constant covers the decade: the ratio stays bounded as eps shrinks.
  const double first = mean.front() / bound.front();
  const double last = mean.back() / bound.back();
  EXPECT_LE(first, 2.0 * last);
}

TEST(Density, DiracControlHasNoDensity) {
  AmbitSpec s = slab_spec(0.5);
  s.g = Kernel::constant(0.0);
  EnsembleOptions options;
  options.n_paths = 500;
  besov::CriterionOptions criterion;
  criterion.n = 1;
  const auto report =
      density_criterion_experiment(s, stable(1.2), 0.25, 0.0, criterion, options, small_disc());
  EXPECT_FALSE(report.density_verdict);
}

TEST(Density, ZeroVolatilityWeightsThrow) {
  AmbitSpec s = slab_spec(0.5);
  s.sigma = holder::FieldSpec::constant(0.0);
  EnsembleOptions options;
  options.n_paths = 50;
  besov::CriterionOptions criterion;
  EXPECT_THROW(density_criterion_experiment(s, stable(1.2), 0.25, 0.0, criterion, options, small_disc()),
               std::domain_error);
}
