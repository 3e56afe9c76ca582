#include "ambitlab/noise.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fft.hpp"
#include "quadrature.hpp"

namespace ambitlab::noise {

using std::numbers::pi;

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::white:
      return "white";
    case NoiseKind::riesz:
      return "riesz";
    case NoiseKind::exponential:
      return "exponential";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "white") {
    return NoiseKind::white;
  }
  if (name == "riesz") {
    return NoiseKind::riesz;
  }
  if (name == "exponential") {
    return NoiseKind::exponential;
  }
  throw std::invalid_argument("unknown noise kind '" + name + "' (expected white, riesz or exponential)");
}

double sphere_area(int d) {
  return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

void SpectralNoiseModel::validate() const {
  if (d < 1 || d > 3) {
    throw std::invalid_argument("noise: dimension must be 1, 2 or 3");
  }
  if (kind == NoiseKind::riesz && !(beta > 0.0 && beta < d)) {
    throw std::invalid_argument("noise: riesz exponent must satisfy 0 < beta < d");
  }
  if (kind == NoiseKind::exponential && !(ell > 0.0)) {
    throw std::invalid_argument("noise: correlation length must be positive");
  }
  if (!(cutoff > 0.0)) {
    throw std::invalid_argument("noise: cutoff must be positive");
  }
}

double SpectralNoiseModel::density(double rho) const {
  if (rho > cutoff) {
    return 0.0;
  }
  switch (kind) {
    case NoiseKind::white:
      return 1.0;
    case NoiseKind::riesz:
      return std::pow(rho, beta - d);
    case NoiseKind::exponential: {
      const double c = std::tgamma(0.5 * (d + 1)) * std::pow(pi, 0.5 * (d - 1)) *
                       std::pow(2.0 * ell, d) / std::pow(2.0 * pi, d);
      return c * std::pow(1.0 + ell * ell * rho * rho, -0.5 * (d + 1));
    }
  }
  return 0.0;
}

double SpectralNoiseModel::covariance(double r) const {
  if (!(r > 0.0)) {
    throw std::invalid_argument("covariance: distance must be positive");
  }
  switch (kind) {
    case NoiseKind::white:
      throw std::invalid_argument("covariance: white noise has no pointwise covariance");
    case NoiseKind::riesz: {
      const double c = std::pow(pi, 0.5 * d) * std::pow(2.0, beta) * std::tgamma(0.5 * beta) /
                       std::tgamma(0.5 * (d - beta));
      return c * std::pow(r, -beta);
    }
    case NoiseKind::exponential:
      return std::exp(-r / ell);
  }
  return 0.0;
}

std::string SpectralNoiseModel::describe() const {
  std::ostringstream os;
  os << to_string(kind) << " d=" << d;
  if (kind == NoiseKind::riesz) {
    os << " beta=" << beta;
  } else if (kind == NoiseKind::exponential) {
    os << " ell=" << ell;
  }
  return os.str();
}

void Grid::validate() const {
  if (d < 1 || d > 3) {
    throw std::invalid_argument("grid: dimension must be 1, 2 or 3");
  }
  if (m < 2 || (m & (m - 1)) != 0) {
    throw std::invalid_argument("grid: points per axis must be a power of two");
  }
  if (!(lbox > 0.0)) {
    throw std::invalid_argument("grid: extent must be positive");
  }
}

double Grid::cell_volume() const { return std::pow(dx(), d); }

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) {
    n *= m;
  }
  return n;
}

std::vector<int> Grid::shape() const { return std::vector<int>(static_cast<std::size_t>(d), static_cast<int>(m)); }

namespace {

/// Signed integer frequency of FFT index i.
long signed_index(std::size_t i, std::size_t m) {
  return i <= m / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(m);
}

template <class Fn>
void for_each_index(const Grid& grid, Fn&& fn) {
  const std::size_t n = grid.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(grid.d), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    fn(flat, idx);
    for (int a = grid.d - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < grid.m) {
        break;
      }
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
}

}  // namespace

std::vector<double> frequency_norms(const Grid& grid) {
  grid.validate();
  std::vector<double> rho(grid.size());
  const double dk = 2.0 * pi / grid.lbox;
  for_each_index(grid, [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t i : idx) {
      const double k = static_cast<double>(signed_index(i, grid.m));
      s += k * k;
    }
    rho[flat] = dk * std::sqrt(s);
  });
  return rho;
}

std::vector<double> spectral_weights(const SpectralNoiseModel& model, const Grid& grid) {
  model.validate();
  grid.validate();
  if (model.d != grid.d) {
    throw std::invalid_argument("spectral_weights: model and grid dimensions differ");
  }
  const double dk = 2.0 * pi / grid.lbox;
  const double cell = std::pow(dk, grid.d);
  const auto rho = frequency_norms(grid);
  std::vector<double> w(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (rho[k] > model.cutoff) {
      w[k] = 0.0;
      continue;
    }
    if (model.kind != NoiseKind::riesz) {
      w[k] = model.density(rho[k]) * cell;
      continue;
    }
    const double b = model.beta;
    if (grid.d == 1) {
      const double kk = rho[k] / dk;
      const double hi = std::pow((kk + 0.5) * dk, b);
      const double lo = kk == 0.0 ? -hi : std::pow((kk - 0.5) * dk, b);
      w[k] = (hi - lo) / b;
    } else if (rho[k] == 0.0) {
      // ball of the cell's volume around the origin
      const double unit_ball = sphere_area(grid.d) / grid.d;
      const double r0 = dk * std::pow(1.0 / unit_ball, 1.0 / grid.d);
      w[k] = sphere_area(grid.d) * std::pow(r0, b) / b;
    } else {
      w[k] = model.density(rho[k]) * cell;
    }
  }
  return w;
}

NoiseSampler::NoiseSampler(SpectralNoiseModel model, Grid grid)
    : model_(model), grid_(grid), weights_(spectral_weights(model, grid)),
      rho_(frequency_norms(grid)) {
  const double n = static_cast<double>(grid_.size());
  amplitude_.resize(weights_.size());
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    amplitude_[k] = std::sqrt(n * weights_[k]);
  }
  partner_.resize(grid_.size());
  for_each_index(grid_, [&](std::size_t flat, const std::vector<std::size_t>& idx) {
    std::size_t p = 0;
    for (std::size_t i : idx) {
      p = p * grid_.m + (grid_.m - i) % grid_.m;
    }
    partner_[flat] = p;
  });
  plan_ = detail::shared_plan(grid_.shape());
}

void NoiseSampler::hermitian_normals(Philox& rng, std::vector<std::complex<double>>& out) const {
  const std::size_t n = grid_.size();
  out.resize(n);
  const double full = std::sqrt(static_cast<double>(n));
  const double half = std::sqrt(0.5 * static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = partner_[k];
    if (p == k) {
      out[k] = {full * rng.normal(), 0.0};
    } else if (k < p) {
      const double re = half * rng.normal();
      const double im = half * rng.normal();
      out[k] = {re, im};
      out[p] = {re, -im};
    }
  }
}

void NoiseSampler::sample_fourier(double dt, Philox& rng, std::vector<std::complex<double>>& out) const {
  if (!(dt >= 0.0)) {
    throw std::invalid_argument("sample_fourier: dt must be nonnegative");
  }
  hermitian_normals(rng, out);
  const double s = std::sqrt(dt);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] *= amplitude_[k] * s;
  }
}

void NoiseSampler::to_physical(std::vector<std::complex<double>>& data) const {
  if (data.size() != grid_.size()) {
    throw std::invalid_argument("to_physical: size mismatch");
  }
  plan_->backward(data.data());
  const double inv = 1.0 / static_cast<double>(data.size());
  for (auto& z : data) {
    z *= inv;
  }
}

void NoiseSampler::to_fourier(std::vector<std::complex<double>>& data) const {
  if (data.size() != grid_.size()) {
    throw std::invalid_argument("to_fourier: size mismatch");
  }
  plan_->forward(data.data());
}

NoiseIncrementField NoiseSampler::sample(double dt, Philox& rng) const {
  std::vector<std::complex<double>> buf;
  sample_fourier(dt, rng, buf);
  to_physical(buf);
  NoiseIncrementField field;
  field.grid = grid_;
  field.dt = dt;
  field.values.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    field.values[i] = buf[i].real();
  }
  return field;
}

NoiseIncrementField sample_increment(const SpectralNoiseModel& model, const Grid& grid, double dt,
                                     Philox& rng) {
  return NoiseSampler(model, grid).sample(dt, rng);
}

double inner_product_H(const SpectralNoiseModel& model, const Grid& grid,
                       std::span<const double> phi, std::span<const double> psi) {
  const std::size_t n = grid.size();
  if (phi.size() != n || psi.size() != n) {
    throw std::invalid_argument("inner_product_H: functions do not match the grid");
  }
  const auto w = spectral_weights(model, grid);
  auto plan = detail::shared_plan(grid.shape());
  std::vector<std::complex<double>> a(phi.begin(), phi.end()), b(psi.begin(), psi.end());
  plan->forward(a.data());
  plan->forward(b.data());
  const double vol = grid.cell_volume();
  mc::CompensatedSum s;
  for (std::size_t k = 0; k < n; ++k) {
    s.add(w[k] * (a[k] * std::conj(b[k])).real());
  }
  return s.value() * vol * vol;
}

namespace {

/// Power of rho governing rho^(d-1) density(rho) / rho^2 at infinity.
double tail_power(const SpectralNoiseModel& model) {
  const double r1 = 1e6, r2 = 2e6;
  auto env = [&](double r) { return std::pow(r, model.d - 3) * model.density(r); };
  return std::log(env(r2) / env(r1)) / std::log(2.0);
}

}  // namespace

double variance_window(const SpectralNoiseModel& model, const FundamentalSolution& op, double a,
                       double b) {
  model.validate();
  if (model.d != op.dimension()) {
    throw std::invalid_argument("variance_window: noise and operator dimensions differ");
  }
  if (!(a >= 0.0) || !(b > a)) {
    throw std::invalid_argument("variance_window: need 0 <= a < b");
  }
  const double area = sphere_area(model.d);
  const bool bounded = std::isfinite(model.cutoff);
  const bool decaying = op.op() == Operator::heat && a > 0.0;
  if (!bounded && !decaying && tail_power(model) > -1.0 - 1e-6) {
    std::ostringstream os;
    os << "variance_window: inner integral over xi diverges at s = "
       << (op.op() == Operator::heat ? a : b) << " for " << model.describe() << " with "
       << op.describe();
    throw std::domain_error(os.str());
  }
  auto integrand = [&](double rho) {
    if (rho == 0.0) {
      return model.d == 1 && model.kind != NoiseKind::riesz
                 ? area * model.density(0.0) * op.squared_time_integral(a, b, 0.0)
                 : 0.0;
    }
    return area * std::pow(rho, model.d - 1) * model.density(rho) *
           op.squared_time_integral(a, b, rho);
  };
  const double tol = 1e-11;
  if (op.op() == Operator::heat) {
    const double split = std::min(1.0 / std::sqrt(b), model.cutoff);
    double v = detail::integrate_ts(integrand, 0.0, split, tol);
    if (bounded) {
      if (model.cutoff > split) {
        v += detail::integrate_gk(integrand, split, model.cutoff, tol);
      }
    } else {
      v += detail::integrate_tail(integrand, split, tol);
    }
    return v;
  }
  // wave: oscillatory integrand, half-period panels then the smooth tail
  const double panel = 0.5 * pi / b;
  const double reach = bounded ? model.cutoff : 2000.0 * pi / b;
  double v = detail::integrate_ts(integrand, 0.0, std::min(panel, reach), tol);
  mc::CompensatedSum s;
  for (double lo = panel; lo < reach; lo += panel) {
    s.add(detail::integrate_gk(integrand, lo, std::min(lo + panel, reach), tol, 6));
  }
  v += s.value();
  if (!bounded) {
    auto smooth = [&](double rho) {
      return area * std::pow(rho, model.d - 3) * model.density(rho) * 0.5 * (b - a);
    };
    v += detail::integrate_tail(smooth, reach, tol);
  }
  return v;
}

double variance_g(const SpectralNoiseModel& model, const FundamentalSolution& op, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("variance_g: eps must be positive");
  }
  return variance_window(model, op, 0.0, eps);
}

double dalang_integral(const SpectralNoiseModel& model, const FundamentalSolution& op, double T) {
  return variance_g(model, op, T);
}

double zero_mode_integral(const FundamentalSolution& op, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("zero_mode_integral: eps must be positive");
  }
  return detail::integrate_gk(
      [&](double s) {
        const double f = op.fourier(s, 0.0);
        return f * f;
      },
      0.0, eps, 1e-13);
}

GammaExponents exponent_gamma(const SpectralNoiseModel& model, const FundamentalSolution& op,
                              std::span<const double> eps_grid) {
  if (eps_grid.size() < 6) {
    throw std::invalid_argument("exponent_gamma: need at least 6 eps values");
  }
  GammaExponents out;
  out.eps.assign(eps_grid.begin(), eps_grid.end());
  for (double e : eps_grid) {
    out.g.push_back(variance_g(model, op, e));
    out.g_zero.push_back(zero_mode_integral(op, e));
  }
  out.gamma = mc::require_r2(mc::fit_scaling(out.eps, out.g), 0.99);
  out.gamma1 = out.gamma;
  out.gamma2 = mc::require_r2(mc::fit_scaling(out.eps, out.g_zero), 0.99);
  return out;
}

}  // namespace ambitlab::noise
