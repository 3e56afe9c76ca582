#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ambitlab/montecarlo.hpp"

namespace ambitlab::besov {

/// Coefficients of the forward difference Delta_h^n f(x) = sum_j c_j f(x + j h),
/// c_j = (-1)^(n-j) binom(n, j).
struct Stencil {
  int n = 0;
  std::vector<std::int64_t> coefficients;
};

/// Throws std::invalid_argument unless 1 <= n <= 20.
Stencil make_stencil(int n);

template <class F>
double finite_difference(F&& f, double x, double h, const Stencil& stencil) {
  double acc = 0.0;
  for (int j = 0; j <= stencil.n; ++j) {
    acc += static_cast<double>(stencil.coefficients[static_cast<std::size_t>(j)]) * f(x + j * h);
  }
  return acc;
}

template <class F>
double finite_difference(F&& f, double x, double h, int n) {
  return finite_difference(f, x, h, make_stencil(n));
}

/// Delta_h^n applied to exp(i k x), evaluated in product form
/// exp(i k x) (2 i sin(k h / 2) exp(i k h / 2))^n.
std::complex<double> exp_difference(double k, double x, double h, int n);

/// Samples of a function on a uniform 1-D grid x_i = x0 + i dx.
struct GriddedFunction {
  double x0 = 0.0;
  double dx = 1.0;
  std::vector<double> values;
};

struct BesovEstimate {
  double s = 0.0;
  int n = 0;
  double l1_norm = 0.0;
  double sup_term = 0.0;
  double total = 0.0;
  std::vector<double> h_grid;
};

/// Geometric grid 1, 1/2, ..., 2^-(points-1).
std::vector<double> default_h_grid(int points = 16);

/// Lower estimate of the B^s_{1,inf} norm: trapezoid L1 norm plus the largest
/// h^-s ||Delta_h^n f||_1 over h_grid. Shifted samples outside the grid are
/// dropped from the sum; non-integer shifts are linearly interpolated.
BesovEstimate besov_norm_estimate(const GriddedFunction& f, double s, int n,
                                  std::span<const double> h_grid);

struct WeightedSample {
  double weight = 1.0;
  double value = 0.0;
};

/// Test function exp(i k x) with k fixed, or with k = pi / h tied to the step
/// ("resonant"), which probes the worst case over the family at every h.
struct TestFunction {
  double k = 1.0;
  bool resonant = false;

  double frequency(double h) const;
  std::string id() const;
};

/// Upper bound on the C^a_b norm of exp(i k .): 1 + 2^(1-a) k^a.
double holder_norm(double k, double a);

struct CriterionStatistic {
  std::string test_function_id;
  std::vector<double> h_values;     // strictly decreasing
  std::vector<double> stat_values;  // |mean(w Delta_h^n phi(X))| / ||phi||
  std::vector<double> stat_stderr;
  std::vector<bool> significant;    // stat > 3 stderr
  mc::ScalingFit fitted_exponent;
};

struct CriterionOptions {
  int n = 1;
  std::vector<double> h_grid = default_h_grid();
  std::vector<double> frequencies{0.5, 1.0, 2.0, 4.0, 8.0};
  bool include_resonant = true;
  double holder_order = 0.5;  // a in ||phi||_{C^a_b}
};

/// One test function. The fit uses the smallest decade of h on which the
/// statistic exceeds 3 standard errors; fewer than 4 such points gives an
/// inconclusive fit, an identically zero statistic a degenerate one.
CriterionStatistic criterion_statistic(std::span<const WeightedSample> samples, int n,
                                       std::span<const double> h_grid, const TestFunction& phi,
                                       double holder_order);

struct CriterionReport {
  std::vector<CriterionStatistic> members;
  CriterionStatistic envelope;  // max over significant members at each h
  double holder_order = 0.0;
  /// Envelope decays faster than h^holder_order: slope - ci > holder_order.
  bool density_verdict = false;
};

CriterionReport criterion_family(std::span<const WeightedSample> samples,
                                 const CriterionOptions& options);

}  // namespace ambitlab::besov
