#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ambitlab/montecarlo.hpp"
#include "ambitlab/rng.hpp"

namespace ambitlab::detail {
class FftPlan;
}

namespace ambitlab::holder {

/// Fractional Brownian motion B(k step), k = 0..n, B(0) = 0, sampled exactly by
/// circulant embedding of the increment covariance. Immutable and shareable.
class FbmSampler {
public:
  FbmSampler(double hurst, std::size_t n, double step);

  std::vector<double> sample(Philox& rng) const;

  double hurst() const { return hurst_; }
  std::size_t size() const { return n_; }
  double step() const { return step_; }

private:
  double hurst_;
  std::size_t n_;
  double step_;
  std::vector<double> amplitude_;  // sqrt(eigenvalue / M)
  std::shared_ptr<const detail::FftPlan> plan_;
};

/// Random field on [0, T] x R used for volatility and drift:
///   const:a                      a
///   fbm:level,scale,h1,h2        level + scale (B1(s) + B2(y))
///   expfbm:level,scale,h1,h2     level exp(scale (B1(s) + B2(y)))
/// with independent fractional Brownian motions B1 (Hurst h1, in time) and B2
/// (Hurst h2, in space, started at the left edge of the grid). Increments obey
/// E|F(t,x) - F(s,y)|^p <= C (|t-s|^(h1 p) + |x-y|^(h2 p)) for every p.
struct FieldSpec {
  enum class Kind { constant, additive, exponential };

  Kind kind = Kind::constant;
  double level = 1.0;
  double scale = 0.0;
  double h_time = 0.5;
  double h_space = 0.5;

  void validate() const;
  bool is_constant() const { return kind == Kind::constant || scale == 0.0; }
  std::string describe() const;

  static FieldSpec constant(double a) { return {Kind::constant, a, 0.0, 0.5, 0.5}; }
  static FieldSpec parse(const std::string& text);
};

/// Node grid s_i = s0 + i ds (i = 0..ns), y_j = y0 + j dy (j = 0..ny). Fields
/// are sampled on the half-step grid so both nodes and cell midpoints exist.
struct FieldGrid {
  double s0 = 0.0;
  double ds = 1.0;
  std::size_t ns = 1;
  double y0 = 0.0;
  double dy = 1.0;
  std::size_t ny = 1;
};

/// One realization on the half-step grid of a FieldGrid.
class FieldPath {
public:
  FieldPath() = default;
  FieldPath(FieldSpec spec, std::vector<double> time_part, std::vector<double> space_part);

  /// Value at half-step indices (a, b): s = s0 + a ds / 2, y = y0 + b dy / 2.
  double at(std::size_t a, std::size_t b) const;
  double node(std::size_t i, std::size_t j) const { return at(2 * i, 2 * j); }
  double cell(std::size_t i, std::size_t j) const { return at(2 * i + 1, 2 * j + 1); }
  bool constant() const { return spec_.is_constant(); }

private:
  FieldSpec spec_;
  std::vector<double> time_;   // scale B1 or exp(scale B1)
  std::vector<double> space_;  // scale B2 or exp(scale B2)
};

class FieldSampler {
public:
  FieldSampler(FieldSpec spec, FieldGrid grid);

  FieldPath sample(Philox& rng) const;

  const FieldSpec& spec() const { return spec_; }
  const FieldGrid& grid() const { return grid_; }

private:
  FieldSpec spec_;
  FieldGrid grid_;
  std::unique_ptr<FbmSampler> time_;
  std::unique_ptr<FbmSampler> space_;
};

enum class Direction { time, space };

struct HolderCheck {
  std::vector<double> lags;
  std::vector<double> moments;  // E|F(s + lag) - F(s)|^p (or the spatial analogue)
  std::vector<double> std_error;
  mc::ScalingFit fit;           // slope estimates h p
  double exponent = 0.0;        // fit.slope / p
};

/// Monte Carlo regression of the p-th increment moment against the lag, at the
/// grid midpoint. Lags are whole multiples of the half step.
HolderCheck holder_moment_check(const FieldSpec& spec, const FieldGrid& grid, Direction direction,
                                double p, std::span<const std::size_t> half_steps,
                                std::size_t n_paths, std::uint64_t seed);

}  // namespace ambitlab::holder
