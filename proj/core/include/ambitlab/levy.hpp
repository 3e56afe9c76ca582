#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ambitlab/montecarlo.hpp"
#include "ambitlab/rng.hpp"

namespace ambitlab::levy {

/// Stable-like Levy basis on R x R: control measure lambda ds dy (constant
/// weight) and jump measure rho(dz) = c_plus z^(-alpha-1) 1{z>0} + c_minus |z|^(-alpha-1) 1{z<0}.
struct LevyBasisModel {
  double alpha = 1.0;
  double c_plus = 1.0;
  double c_minus = 1.0;
  double lambda = 1.0;

  void validate() const;
  double mass() const { return c_plus + c_minus; }
  bool symmetric() const { return c_plus == c_minus; }
  /// int min(1, z^2) rho(dz) = (c_plus + c_minus) (1/(2-alpha) + 1/alpha).
  double truncated_mass() const;
  /// Same model with c_plus, c_minus rescaled so that truncated_mass() == 1.
  LevyBasisModel normalized() const;
};

/// K_alpha = int_0^inf (1 - cos u) u^(-alpha-1) du by quadrature.
double k_alpha(double alpha);

/// int_{|z|>a} |z|^beta rho(dz), by quadrature.
double tail_integral(const LevyBasisModel& model, double a, double beta);
/// int_{|z|<=a} |z|^gamma rho(dz), by quadrature (gamma > alpha).
double small_jump_integral(const LevyBasisModel& model, double a, double gamma);
/// int (1 - cos(xi z)) rho(dz), by quadrature.
double cosine_integral(const LevyBasisModel& model, double xi);

struct AssumptionConstants {
  double alpha = 0.0;
  double mass = 0.0;
  double C_bar = 0.0;    // small-jump constant (c_plus + c_minus) / (2 - alpha)
  double c_lower = 0.0;  // inf of cosine_integral(xi) / |xi|^alpha over the lattice
  double c_upper = 0.0;  // sup of the same ratio
  double r = 0.0;        // threshold from which the cosine bound is verified
  double max_violation = 0.0;  // largest (lhs - rhs) / rhs over every checked inequality
  bool verified = false;

  /// (c_plus + c_minus) / (alpha - beta); throws for beta >= alpha.
  double C_beta(double beta) const;
};

/// Sharp constants of the tail, small-jump and cosine bounds, each re-verified
/// by quadrature on a lattice of a and xi values.
AssumptionConstants assumption_constants(const LevyBasisModel& model);

/// 2^(-gamma+2) 2^(2-alpha) / (2^(gamma-alpha) - 1).
double moment_constant(double gamma, double alpha);

struct MomentRow {
  double a = 0.0;
  double integral = 0.0;
  double bound = 0.0;
};

struct MomentReport {
  double gamma = 0.0;
  double alpha = 0.0;
  double C_gamma_alpha = 0.0;
  double C_bar = 0.0;
  std::vector<MomentRow> rows;
  double max_violation = 0.0;  // max (integral - bound) / bound
  std::size_t violations = 0;  // rows with integral > bound (1 + 1e-9)
};

/// Compares int_{|z|<=a} |z|^gamma rho(dz) with C_{gamma,alpha} C_bar a^(gamma-alpha).
/// Throws std::invalid_argument unless alpha < gamma <= 2.
MomentReport moment_lemma_check(const LevyBasisModel& model, double gamma,
                                std::span<const double> a_grid);

/// Space-time region {s_lo <= s <= s_hi, y_lo(s) <= y <= y_hi(s)} inside the
/// box [s_lo, s_hi] x [box_y_lo, box_y_hi].
struct Region {
  double s_lo = 0.0;
  double s_hi = 1.0;
  std::function<double(double)> y_lo;
  std::function<double(double)> y_hi;
  double box_y_lo = 0.0;
  double box_y_hi = 1.0;

  bool contains(double s, double y) const;
  double box_area() const { return (s_hi - s_lo) * (box_y_hi - box_y_lo); }

  static Region rectangle(double s_lo, double s_hi, double y_lo, double y_hi);
  /// {s_lo <= s <= t, |y - x| <= c (t - s)^zeta}; zeta = 0 gives a slab.
  static Region cone(double t, double x, double c, double zeta, double s_lo = 0.0);
};

using Integrand = std::function<double(double s, double y)>;

/// int_region g(s, y) ds dy by nested quadrature (tanh-sinh in s, Gauss-Kronrod in y).
double integrate_region(const Region& region, const Integrand& g, double rel_tol = 1e-10);

struct SamplingOptions {
  double tau = 0.0;             // jump truncation; 0 selects it from variance_target
  double variance_target = 1e-3;
  double max_expected_jumps = 5e6;
};

/// Truncation level whose replaced small-jump variance per unit measure is
/// variance_target: mass tau^(2-alpha) / (2-alpha) = variance_target.
double truncation_level(const LevyBasisModel& model, const SamplingOptions& options);

/// Variance of the jumps below tau per unit control measure.
double small_jump_variance(const LevyBasisModel& model, double tau);

/// int_{tau < |z| <= 1} z rho(dz) (negative of the integral over (1, tau] when tau > 1).
double compensator_shift(const LevyBasisModel& model, double tau);

/// Jump magnitude above tau: Pareto(tau, alpha) with sign drawn from c_plus / mass.
double sample_jump(const LevyBasisModel& model, double tau, Philox& rng);

/// Poisson number with the given mean.
std::uint64_t sample_poisson(double mean, Philox& rng);

/// X = int int f dL over a region, simulated by the Poisson decomposition: jumps
/// above tau from a compound Poisson sampler on the bounding box (thinned by
/// region membership), jumps below tau replaced by a centered Gaussian with the
/// same variance, and the compensator of the 1{|z| <= 1} convention.
class IntegralSampler {
public:
  IntegralSampler(LevyBasisModel model, Region region, Integrand f, SamplingOptions options = {});

  double sample(Philox& rng) const;

  double tau() const { return tau_; }
  double expected_jumps() const { return rate_ * region_.box_area(); }
  double f_integral() const { return f1_; }
  double f2_integral() const { return f2_; }

private:
  LevyBasisModel model_;
  Region region_;
  Integrand f_;
  double tau_ = 0.0;
  double rate_ = 0.0;  // jumps above tau per unit box area
  double f1_ = 0.0;    // lambda int f
  double f2_ = 0.0;    // lambda int f^2
  double gauss_sd_ = 0.0;
  double shift_ = 0.0;
};

double sample_integral(const LevyBasisModel& model, const Region& region, const Integrand& f,
                       Philox& rng, const SamplingOptions& options = {});

struct CharacteristicExponentReport {
  std::vector<double> xi;
  std::vector<double> re_psi;
  double scale = 0.0;          // A in Re Psi(xi) = A |xi|^alpha
  mc::ScalingFit fit;          // exponent of Re Psi against |xi|
  double c_lower = 0.0;        // min Re Psi / |xi|^alpha on the grid
  double c_upper = 0.0;        // max of the same ratio
  bool sandwich_ok = false;    // 0 < c_lower <= c_upper < inf and |slope - alpha| <= 0.03
};

/// Re Psi_X(xi) = int int lambda int (1 - cos(xi f z)) rho(dz) ds dy.
double re_psi(const LevyBasisModel& model, const Region& region, const Integrand& f, double xi);

CharacteristicExponentReport characteristic_exponent(const LevyBasisModel& model,
                                                     const Region& region, const Integrand& f,
                                                     std::span<const double> xi_grid);

struct SmoothedDensity {
  double x0 = 0.0;
  double dx = 0.0;
  std::vector<double> p;
  std::vector<std::vector<double>> derivatives;  // p^(n), n = 1..n_max
  std::vector<double> derivative_l1;             // ||p^(n)||_1, index n (entry 0 is ||p||_1)
  double scale = 0.0;                            // A in exp(-A |xi|^alpha)

  double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
  double integral() const;
};

/// Density of the symmetric integral and its derivatives by Fourier inversion
/// of exp(-Re Psi). The frequency extent is chosen so exp(-Re Psi) < 1e-12 at
/// its edge. Throws std::domain_error when Re Psi does not grow like |xi|^alpha.
SmoothedDensity smoothed_density(const LevyBasisModel& model, const Region& region,
                                 const Integrand& f, int n_max);

struct DerivativeScaling {
  std::vector<double> eps;
  std::vector<double> l1;
  mc::ScalingFit fit;  // slope of ||p^(n)||_1 against eps
};

/// ||p^(n)||_1 of the slab integral over regions(eps) for each eps.
DerivativeScaling derivative_scaling(const LevyBasisModel& model,
                                     const std::function<Region(double)>& regions,
                                     const Integrand& f, int n, std::span<const double> eps_grid);

}  // namespace ambitlab::levy
