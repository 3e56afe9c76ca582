#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ambitlab/besov.hpp"
#include "ambitlab/holder_field.hpp"
#include "ambitlab/levy.hpp"
#include "ambitlab/montecarlo.hpp"
#include "ambitlab/rng.hpp"

namespace ambitlab::ambit {

/// Cone {(s, y): 0 <= s <= t, |x - y| <= c (t - s)^zeta}; zeta = 0 is a slab of half-width c.
struct ConeSet {
  double c = 1.0;
  double zeta = 1.0;

  void validate() const;
  double half_width(double t, double s) const;
  levy::Region region(double t, double x, double s_lo = 0.0) const;
};

/// Deterministic kernel k(t, s; x, y):
///   const:a        a
///   power:a,theta  a (t - s)^(-theta)
///   gauss:a,ell    a exp(-(x - y)^2 / (2 ell^2))
struct Kernel {
  enum class Kind { constant, power, gauss };

  Kind kind = Kind::constant;
  double a = 1.0;
  double p = 0.0;

  double operator()(double t, double s, double x, double y) const;
  bool is_zero() const { return a == 0.0; }
  std::string describe() const;
  void validate() const;

  static Kernel constant(double value) { return {Kind::constant, value, 0.0}; }
  static Kernel parse(const std::string& text);
};

/// X(t,x) = x0 + int_{A_t(x)} g sigma dL + int_{B_t(x)} h b ds dy.
struct AmbitSpec {
  ConeSet A;
  ConeSet B;
  Kernel g = Kernel::constant(1.0);
  Kernel h = Kernel::constant(0.0);
  holder::FieldSpec sigma = holder::FieldSpec::constant(1.0);
  holder::FieldSpec b = holder::FieldSpec::constant(0.0);
  double x0 = 0.0;
  double delta1 = 0.5;  // declared time Holder exponent of sigma and b
  double delta2 = 0.5;  // declared space Holder exponent of sigma and b

  void validate() const;
  bool has_drift() const { return !h.is_zero() && !(b.is_constant() && b.level == 0.0); }
  std::string describe() const;
};

/// beta = alpha/2 + 0.45 min(alpha, 1) and gamma = min(2, alpha + 0.5).
double default_beta(double alpha);
double default_gamma(double alpha);

/// max(C_bar, C_beta + C_1), where C_1 only enters when alpha > 1.
double c_tilde(const levy::AssumptionConstants& constants, double beta);

struct ExponentBundle {
  std::vector<double> eps;
  std::vector<double> lower;       // slab integral of c |g|^alpha
  std::vector<double> plain;       // slab integral of C~ |g|^gamma
  std::vector<double> time_holder;   // ... times |t - eps - s|^(delta1 gamma)
  std::vector<double> space_holder;  // ... times |x - y|^(delta2 gamma)
  std::vector<double> drift_time;    // slab integral over B of |h|^beta_h |t - eps - s|^(delta1 beta_h)
  std::vector<double> drift_space;   // ... |h|^beta_h |x - y|^(delta2 beta_h)
  double integrability = 0.0;        // slab integral of max(C_bar, C_0) |g|^alpha at the largest eps
  double alpha = 0.0;
  double beta = 0.0;
  double beta_h = 0.0;
  double gamma = 0.0;
  double c_tilde = 0.0;
  double c_lower = 0.0;
  mc::ScalingFit gamma0;
  mc::ScalingFit gamma1_bar;  // slope of `plain` divided by gamma
  mc::ScalingFit gamma1;
  mc::ScalingFit gamma2;
  mc::ScalingFit gamma3;  // slope infinite (flag degenerate) without drift
  mc::ScalingFit gamma4;
  double gammabar = 0.0;  // min(gamma1..gamma4)
  bool verdict = false;   // gammabar / gamma0 > 1 / alpha with every fit ok
};

/// Slab quadratures of the exponent conditions at (t, x) for every eps, fitted
/// against eps (R^2 >= 0.99 or flagged). Each quadrature is repeated at a
/// tighter tolerance and must agree to 1%. Throws std::domain_error naming the
/// condition whose integral is not finite.
ExponentBundle exponent_conditions(const AmbitSpec& spec, const levy::LevyBasisModel& model,
                                   double t, double x, std::span<const double> eps_grid,
                                   double beta, double gamma);

struct Discretization {
  std::size_t time_cells = 256;   // sigma, b frozen per cell; eps is a whole number of rows
  std::size_t space_cells = 256;
  double jumps_per_row = 64.0;    // expected jumps above the row truncation level
};

/// Jumps and Gaussian small-jump normals of one path, with the sampled fields.
struct JumpRecord {
  struct Jump {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double weight = 0.0;  // g(t, s; x, y) z
  };
  std::vector<Jump> jumps;
  std::vector<double> normals;  // one per Gaussian cell (or per row for constant sigma)
  holder::FieldPath sigma;
  holder::FieldPath b;
};

/// Per-row sums of one path; X and X^eps follow from them exactly.
struct PathSums {
  std::vector<double> noise;       // row sum of sigma(cell) * (unit-sigma contributions)
  std::vector<double> unit_noise;  // row sum of unit-sigma contributions
  std::vector<double> drift;       // row sum of b(cell) int_{cell in B} h
  double x0 = 0.0;
};

struct PairedValue {
  double eps = 0.0;
  double x = 0.0;       // X(t, x)
  double x_eps = 0.0;   // X^eps(t, x)
  double u_eps = 0.0;   // history part
  double gap = 0.0;     // X - X^eps from the slab rows only
  double coupling_bound = 0.0;  // triangle inequality bound on |gap|
};

/// Field evaluator at a fixed point (t, x) on a fixed cell grid. Cell
/// quadratures of g^2, g and h are precomputed; the evaluator is immutable.
class AmbitEvaluator {
public:
  AmbitEvaluator(AmbitSpec spec, levy::LevyBasisModel model, double t, double x,
                 Discretization disc = {});
  ~AmbitEvaluator();
  AmbitEvaluator(AmbitEvaluator&&) noexcept;

  const AmbitSpec& spec() const { return spec_; }
  double t() const { return t_; }
  double x() const { return x_; }
  double row_width() const { return ds_; }
  std::size_t rows() const { return disc_.time_cells; }
  /// Truncation level of each time row.
  const std::vector<double>& tau() const;

  JumpRecord draw(Philox& rng) const;
  PathSums sums(const JumpRecord& record) const;

  double evaluate(const JumpRecord& record) const;
  /// eps is rounded to a whole number of rows k >= 1; 0 < eps <= t.
  PairedValue evaluate_pair(const JumpRecord& record, double eps) const;
  /// U^eps from the history rows only.
  double u_eps(const JumpRecord& record, double eps) const;
  /// Number of rows of the slab [t - eps, t].
  std::size_t slab_rows(double eps) const;
  /// sigma(t, x) at the grid node.
  double sigma_at_point(const JumpRecord& record) const;

  /// Copy of `record` with every jump and normal of the slab rows removed or zeroed.
  JumpRecord erase_slab(const JumpRecord& record, double eps) const;

  /// Paired values for a slab of k rows from precomputed sums (no coupling bound).
  PairedValue pair_from(const JumpRecord& record, const PathSums& sums, std::size_t k) const;

private:
  struct Cells;
  AmbitSpec spec_;
  levy::LevyBasisModel model_;
  double t_;
  double x_;
  Discretization disc_;
  double ds_ = 0.0;
  double dy_ = 0.0;
  double y0_ = 0.0;
  std::unique_ptr<Cells> cells_;
  std::unique_ptr<holder::FieldSampler> sigma_sampler_;
  std::unique_ptr<holder::FieldSampler> b_sampler_;
};

double evaluate(const AmbitSpec& spec, const levy::LevyBasisModel& model, double t, double x,
                Philox& rng, const Discretization& disc = {});

/// X^eps on the same jumps as the paired exact value; throws for eps <= 0 or eps > t.
PairedValue evaluate_approx(const AmbitEvaluator& evaluator, const JumpRecord& record, double eps);

struct EnsembleOptions {
  std::size_t n_paths = 1000;
  unsigned workers = 1;
  std::uint64_t seed = 0;
  std::uint64_t experiment = 0;
};

struct DecayReport {
  std::vector<double> eps;         // rounded to whole rows
  std::vector<double> moments;     // E|X - X^eps|^beta
  std::vector<double> std_error;
  mc::ScalingFit fit;
  double gammabar = 0.0;
  double target_rate = 0.0;        // beta (1/alpha + gammabar) - 1
  bool pass = false;               // slope >= target_rate - 0.15
};

/// Paired-coupling Monte Carlo of E|X - X^eps|^beta over eps_grid. The fit is
/// degenerate when every gap vanishes and inconclusive when its CI exceeds 0.3.
DecayReport error_decay(const AmbitSpec& spec, const levy::LevyBasisModel& model, double t,
                        double x, double beta, std::span<const double> eps_grid,
                        const EnsembleOptions& options, const Discretization& disc = {});

/// Samples (|sigma(t,x)|^n, X(t,x)) and applies the finite-difference criterion.
/// Throws std::domain_error when every weight vanishes.
besov::CriterionReport density_criterion_experiment(const AmbitSpec& spec,
                                                    const levy::LevyBasisModel& model, double t,
                                                    double x,
                                                    const besov::CriterionOptions& criterion,
                                                    const EnsembleOptions& options,
                                                    const Discretization& disc = {});

/// X(t, x) for every path.
std::vector<double> simulate_values(const AmbitSpec& spec, const levy::LevyBasisModel& model,
                                    double t, double x, const EnsembleOptions& options,
                                    const Discretization& disc = {});

}  // namespace ambitlab::ambit
