#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ambitlab/holder_field.hpp"
#include "ambitlab/montecarlo.hpp"

using namespace ambitlab;
using namespace ambitlab::holder;

namespace {

FieldGrid unit_grid(std::size_t ns, std::size_t ny) {
  FieldGrid g;
  g.s0 = 0.0;
  g.ds = 1.0 / static_cast<double>(ns);
  g.ns = ns;
  g.y0 = -1.0;
  g.dy = 2.0 / static_cast<double>(ny);
  g.ny = ny;
  return g;
}

}  // namespace

TEST(Fbm, StartsAtZeroAndHasPowerVariance) {
  for (double hurst : {0.3, 0.5, 0.8}) {
    const FbmSampler fbm(hurst, 256, 1.0 / 256.0);
    std::vector<double> end, mid;
    for (std::size_t p = 0; p < 4000; ++p) {
      Philox rng(StreamKey{1, 7, p});
      const auto b = fbm.sample(rng);
      ASSERT_EQ(b.size(), 257u);
      EXPECT_EQ(b[0], 0.0);
      end.push_back(b[256] * b[256]);
      mid.push_back(b[64] * b[64]);
    }
    const auto e = mc::mean_estimate(end);
    const auto m = mc::mean_estimate(mid);
    EXPECT_LE(std::abs(e.value - 1.0), 5.0 * e.std_error) << "H=" << hurst;
    EXPECT_LE(std::abs(m.value - std::pow(0.25, 2.0 * hurst)), 5.0 * m.std_error) << "H=" << hurst;
  }
}

TEST(Fbm, IncrementCovariance) {
  // Cov(B(1) - B(1/2), B(1/2)) = (1 - 2 (1/2)^(2H)) / 2
  const double hurst = 0.75;
  const FbmSampler fbm(hurst, 64, 1.0 / 64.0);
  std::vector<double> prod;
  for (std::size_t p = 0; p < 20000; ++p) {
    Philox rng(StreamKey{2, 7, p});
    const auto b = fbm.sample(rng);
    prod.push_back((b[64] - b[32]) * b[32]);
  }
  const auto c = mc::mean_estimate(prod);
  const double oracle = 0.5 * (1.0 - 2.0 * std::pow(0.5, 2.0 * hurst));
  EXPECT_LE(std::abs(c.value - oracle), 5.0 * c.std_error);
}

TEST(FieldSpec, Parse) {
  const auto c = FieldSpec::parse("const:2.5");
  EXPECT_EQ(c.kind, FieldSpec::Kind::constant);
  EXPECT_DOUBLE_EQ(c.level, 2.5);
  EXPECT_TRUE(c.is_constant());
  const auto f = FieldSpec::parse("expfbm:1,0.5,0.3,0.7");
  EXPECT_EQ(f.kind, FieldSpec::Kind::exponential);
  EXPECT_DOUBLE_EQ(f.scale, 0.5);
  EXPECT_DOUBLE_EQ(f.h_time, 0.3);
  EXPECT_DOUBLE_EQ(f.h_space, 0.7);
  EXPECT_FALSE(f.is_constant());
  EXPECT_TRUE(FieldSpec::parse("fbm:1,0,0.5,0.5").is_constant());
}

TEST(FieldSpec, RejectsInvalid) {
  EXPECT_THROW(FieldSpec::parse("fbm:1,1,0.5"), std::invalid_argument);
  EXPECT_THROW(FieldSpec::parse("brownian:1"), std::invalid_argument);
  EXPECT_THROW(FieldSpec::parse("fbm:1,1,0,0.5"), std::invalid_argument);
  EXPECT_THROW(FieldSpec::parse("fbm:1,1,0.5,1"), std::invalid_argument);
}

TEST(FieldPath, ConstantFieldEverywhere) {
  const FieldSampler sampler(FieldSpec::constant(1.7), unit_grid(8, 8));
  Philox rng(StreamKey{3, 3, 3});
  const auto f = sampler.sample(rng);
  EXPECT_TRUE(f.constant());
  for (std::size_t a = 0; a <= 16; ++a) {
    for (std::size_t b = 0; b <= 16; ++b) {
      EXPECT_EQ(f.at(a, b), 1.7);
    }
  }
}

TEST(FieldPath, ExponentialFieldIsPositive) {
  const FieldSampler sampler(FieldSpec::parse("expfbm:2,1,0.4,0.6"), unit_grid(16, 16));
  for (std::size_t p = 0; p < 50; ++p) {
    Philox rng(StreamKey{4, 4, p});
    const auto f = sampler.sample(rng);
    for (std::size_t i = 0; i <= 16; ++i) {
      for (std::size_t j = 0; j <= 16; ++j) {
        ASSERT_GT(f.node(i, j), 0.0);
      }
    }
  }
}

TEST(FieldPath, AdditiveFieldStartsAtLevel) {
  const FieldSampler sampler(FieldSpec::parse("fbm:3,1,0.5,0.5"), unit_grid(8, 8));
  Philox rng(StreamKey{5, 5, 5});
  const auto f = sampler.sample(rng);
  EXPECT_DOUBLE_EQ(f.at(0, 0), 3.0);
}

TEST(HolderCheck, AdditiveFieldExponents) {
  const auto spec = FieldSpec::parse("fbm:0,1,0.3,0.7");
  const auto grid = unit_grid(256, 256);
  const std::vector<std::size_t> lags{1, 2, 4, 8, 16, 32};
  for (double p : {2.0, 4.0, 8.0}) {
    const auto t = holder_moment_check(spec, grid, Direction::time, p, lags, 4000, 11);
    const auto s = holder_moment_check(spec, grid, Direction::space, p, lags, 4000, 12);
    EXPECT_NEAR(t.exponent, 0.3, 0.03) << "p=" << p;
    EXPECT_NEAR(s.exponent, 0.7, 0.03) << "p=" << p;
  }
}

TEST(HolderCheck, ExponentialFieldKeepsExponents) {
  const auto spec = FieldSpec::parse("expfbm:1,0.5,0.5,0.5");
  const std::vector<std::size_t> lags{1, 2, 4, 8, 16};
  const auto t = holder_moment_check(spec, unit_grid(128, 128), Direction::time, 2.0, lags, 4000, 13);
  EXPECT_NEAR(t.exponent, 0.5, 0.05);
}

TEST(HolderCheck, RejectsBadLags) {
  const auto spec = FieldSpec::parse("fbm:0,1,0.5,0.5");
  const std::vector<std::size_t> few{1, 2};
  EXPECT_THROW(holder_moment_check(spec, unit_grid(8, 8), Direction::time, 2.0, few, 10, 1),
               std::invalid_argument);
  const std::vector<std::size_t> far{1, 2, 4, 100};
  EXPECT_THROW(holder_moment_check(spec, unit_grid(8, 8), Direction::time, 2.0, far, 10, 1),
               std::invalid_argument);
}
