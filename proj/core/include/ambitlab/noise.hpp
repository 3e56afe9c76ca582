#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ambitlab/fundamental_solution.hpp"
#include "ambitlab/montecarlo.hpp"
#include "ambitlab/rng.hpp"

namespace ambitlab::detail {
class FftPlan;
}

namespace ambitlab::noise {

enum class NoiseKind { white, riesz, exponential };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

/// Spatially homogeneous Gaussian noise, white in time, with spectral measure
/// mu(d xi) = density(|xi|) d xi and covariance Gamma(x) = int exp(i<xi,x>) mu(d xi):
///   white:       density 1, Gamma = (2 pi)^d delta
///   riesz(beta): density |xi|^(beta-d), Gamma = c_{d,beta} |x|^-beta
///   exponential(ell): Gamma(x) = exp(-|x| / ell)
/// Frequencies above `cutoff` are discarded.
struct SpectralNoiseModel {
  int d = 1;
  NoiseKind kind = NoiseKind::white;
  double beta = 0.5;
  double ell = 1.0;
  double cutoff = std::numeric_limits<double>::infinity();

  void validate() const;
  double density(double rho) const;
  /// Gamma at distance r > 0. Throws for white noise, which has no pointwise covariance.
  double covariance(double r) const;
  std::string describe() const;
};

/// Surface area of the unit sphere in R^d.
double sphere_area(int d);

/// Periodic grid with m points per axis on [0, lbox)^d; m must be a power of two.
struct Grid {
  int d = 1;
  std::size_t m = 256;
  double lbox = 32.0;

  void validate() const;
  double dx() const { return lbox / static_cast<double>(m); }
  double cell_volume() const;
  std::size_t size() const;
  std::vector<int> shape() const;
};

/// |xi_k| for every flat index in FFT ordering.
std::vector<double> frequency_norms(const Grid& grid);

/// Spectral mass w_k attached to each discrete frequency. Smooth densities use
/// the midpoint rule; the Riesz density is integrated over each frequency cell
/// (exactly in d = 1), so the integrable singularity at 0 keeps its mass.
std::vector<double> spectral_weights(const SpectralNoiseModel& model, const Grid& grid);

/// One increment of the noise over (t, t+dt]. values[i] = M((t,t+dt] x cell_i) / |cell_i|.
struct NoiseIncrementField {
  Grid grid;
  double dt = 0.0;
  std::vector<double> values;
  std::uint64_t path = 0;
};

/// Spectral synthesis sampler; immutable after construction and safe to share.
class NoiseSampler {
public:
  NoiseSampler(SpectralNoiseModel model, Grid grid);

  const SpectralNoiseModel& model() const { return model_; }
  const Grid& grid() const { return grid_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& frequencies() const { return rho_; }

  /// Hermitian complex normals with E|Z_k|^2 = N (the DFT of N iid real normals).
  void hermitian_normals(Philox& rng, std::vector<std::complex<double>>& out) const;

  /// DFT coefficients of one increment field: sqrt(N w_k dt) Z_k.
  void sample_fourier(double dt, Philox& rng, std::vector<std::complex<double>>& out) const;

  /// Inverse DFT divided by N, in place.
  void to_physical(std::vector<std::complex<double>>& data) const;
  /// Forward DFT, in place.
  void to_fourier(std::vector<std::complex<double>>& data) const;

  NoiseIncrementField sample(double dt, Philox& rng) const;

private:
  SpectralNoiseModel model_;
  Grid grid_;
  std::vector<double> weights_;
  std::vector<double> rho_;
  std::vector<double> amplitude_;  // sqrt(N w_k)
  std::vector<std::size_t> partner_;
  std::shared_ptr<const detail::FftPlan> plan_;
};

/// Throws std::invalid_argument for a non-power-of-two grid or dt < 0.
NoiseIncrementField sample_increment(const SpectralNoiseModel& model, const Grid& grid, double dt,
                                     Philox& rng);

/// <phi, psi>_H = int mu(d xi) F phi(xi) conj(F psi(xi)) on the grid's frequencies,
/// with the same weights the sampler uses.
double inner_product_H(const SpectralNoiseModel& model, const Grid& grid,
                       std::span<const double> phi, std::span<const double> psi);

/// int_a^b ds int mu(d xi) |F Lambda(s)(xi)|^2 by radial quadrature. Throws
/// std::domain_error when the inner integral diverges.
double variance_window(const SpectralNoiseModel& model, const FundamentalSolution& op, double a,
                       double b);

/// g(eps) = variance_window(0, eps).
double variance_g(const SpectralNoiseModel& model, const FundamentalSolution& op, double eps);

/// Dalang integral up to T; throws std::domain_error when infinite.
double dalang_integral(const SpectralNoiseModel& model, const FundamentalSolution& op, double T);

/// int_0^eps |F Lambda(s)(0)|^2 ds.
double zero_mode_integral(const FundamentalSolution& op, double eps);

struct GammaExponents {
  std::vector<double> eps;
  std::vector<double> g;        // g(eps)
  std::vector<double> g_zero;   // zero_mode_integral(eps)
  mc::ScalingFit gamma;
  mc::ScalingFit gamma1;
  mc::ScalingFit gamma2;
};

/// gamma = gamma1 = slope of g, gamma2 = slope of the zero-mode integral. Fits
/// with R^2 < 0.99 are flagged inconclusive. eps_grid needs at least 6 points.
GammaExponents exponent_gamma(const SpectralNoiseModel& model, const FundamentalSolution& op,
                              std::span<const double> eps_grid);

}  // namespace ambitlab::noise
