#include "ambitlab/levy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "fft.hpp"
#include "quadrature.hpp"

namespace ambitlab::levy {

void LevyBasisModel::validate() const {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw std::invalid_argument("LevyBasisModel: alpha must lie in (0, 2)");
  }
  if (!(c_plus >= 0.0) || !(c_minus >= 0.0) || !std::isfinite(c_plus) ||
      !std::isfinite(c_minus)) {
    throw std::invalid_argument("LevyBasisModel: c_plus and c_minus must be finite and >= 0");
  }
  if (!(mass() > 0.0)) {
    throw std::invalid_argument("LevyBasisModel: c_plus + c_minus must be positive");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("LevyBasisModel: lambda must be finite and positive");
  }
}

double LevyBasisModel::truncated_mass() const {
  return mass() * (1.0 / (2.0 - alpha) + 1.0 / alpha);
}

LevyBasisModel LevyBasisModel::normalized() const {
  validate();
  LevyBasisModel out = *this;
  const double m = truncated_mass();
  out.c_plus /= m;
  out.c_minus /= m;
  return out;
}

namespace {

/// int_0^inf (1 - cos(w z)) z^(-alpha-1) dz for w > 0, integrated in z.
double cosine_kernel(double alpha, double w) {
  const double split = std::min(1.0, 1.0 / w);
  auto body = [alpha, w](double z) {
    const double u = w * z;
    if (u < 1e-4) {
      return 0.5 * w * w * std::pow(z, 1.0 - alpha) * (1.0 - u * u / 12.0);
    }
    const double s = std::sin(0.5 * u);
    return 2.0 * s * s * std::pow(z, -alpha - 1.0);
  };
  double v = detail::integrate_ts(body, 0.0, split, 1e-13);
  if (split < 1.0) {
    v += detail::integrate_gk(body, split, 1.0, 1e-13);
  }
  v += detail::integrate_tail([alpha](double z) { return std::pow(z, -alpha - 1.0); }, 1.0,
                              1e-13);
  // int_1^inf cos(w z) z^(-alpha-1) dz with z = 1 + u.
  auto decay = [alpha](double u) { return std::pow(1.0 + u, -alpha - 1.0); };
  const double c = detail::integrate_fourier_cos(decay, w);
  const double s = detail::integrate_fourier_sin(decay, w);
  v -= std::cos(w) * c - std::sin(w) * s;
  return v;
}

}  // namespace

double k_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw std::invalid_argument("k_alpha: alpha must lie in (0, 2)");
  }
  return cosine_kernel(alpha, 1.0);
}

double tail_integral(const LevyBasisModel& model, double a, double beta) {
  model.validate();
  if (!(a > 0.0)) {
    throw std::invalid_argument("tail_integral: a must be positive");
  }
  if (!(beta < model.alpha)) {
    throw std::invalid_argument("tail_integral: diverges for beta >= alpha");
  }
  const double e = beta - model.alpha - 1.0;
  return model.mass() * detail::integrate_tail([e](double z) { return std::pow(z, e); }, a, 1e-13);
}

double small_jump_integral(const LevyBasisModel& model, double a, double gamma) {
  model.validate();
  if (!(a > 0.0)) {
    throw std::invalid_argument("small_jump_integral: a must be positive");
  }
  if (!(gamma > model.alpha)) {
    throw std::invalid_argument("small_jump_integral: diverges for gamma <= alpha");
  }
  const double e = gamma - model.alpha - 1.0;
  return model.mass() * detail::integrate_ts([e](double z) { return std::pow(z, e); }, 0.0, a,
                                             1e-13);
}

double cosine_integral(const LevyBasisModel& model, double xi) {
  model.validate();
  if (xi == 0.0) {
    return 0.0;
  }
  return model.mass() * cosine_kernel(model.alpha, std::abs(xi));
}

double AssumptionConstants::C_beta(double beta) const {
  if (!(beta < alpha)) {
    throw std::invalid_argument("C_beta: requires beta < alpha");
  }
  return mass / (alpha - beta);
}

AssumptionConstants assumption_constants(const LevyBasisModel& model) {
  model.validate();
  AssumptionConstants out;
  out.alpha = model.alpha;
  out.mass = model.mass();
  out.C_bar = out.mass / (2.0 - model.alpha);

  const auto a_grid = mc::geometric_grid(1e-3, 1e3, 13);
  const std::vector<double> betas{0.0, 0.5 * model.alpha, 0.9 * model.alpha};
  double worst = -std::numeric_limits<double>::infinity();
  for (double a : a_grid) {
    for (double beta : betas) {
      const double rhs = out.C_beta(beta) * std::pow(a, beta - model.alpha);
      worst = std::max(worst, (tail_integral(model, a, beta) - rhs) / rhs);
    }
    const double rhs = out.C_bar * std::pow(a, 2.0 - model.alpha);
    worst = std::max(worst, (small_jump_integral(model, a, 2.0) - rhs) / rhs);
  }

  const auto xi = mc::geometric_grid(0.1, 1e3, 25);
  std::vector<double> ratio(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    ratio[i] = cosine_integral(model, xi[i]) / std::pow(xi[i], model.alpha);
  }
  // r: first lattice point from which every local log-log slope is alpha +- 0.03.
  std::size_t first = xi.size();
  for (std::size_t i = xi.size() - 1; i > 0; --i) {
    const double slope = model.alpha + std::log(ratio[i] / ratio[i - 1]) /
                                           std::log(xi[i] / xi[i - 1]);
    if (std::abs(slope - model.alpha) > 0.03) {
      break;
    }
    first = i - 1;
  }
  if (first < xi.size()) {
    out.r = xi[first];
    out.c_lower = std::numeric_limits<double>::infinity();
    for (std::size_t i = first; i < xi.size() && xi[i] <= 100.0 * out.r * (1.0 + 1e-12); ++i) {
      out.c_lower = std::min(out.c_lower, ratio[i]);
      out.c_upper = std::max(out.c_upper, ratio[i]);
    }
    for (std::size_t i = first; i < xi.size(); ++i) {
      const double rhs = out.c_lower * std::pow(xi[i], model.alpha);
      worst = std::max(worst, (rhs - cosine_integral(model, xi[i])) / rhs);
    }
  }
  out.max_violation = worst;
  out.verified = first < xi.size() && out.c_lower > 0.0 && worst <= 1e-9;
  return out;
}

double moment_constant(double gamma, double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw std::invalid_argument("moment_constant: alpha must lie in (0, 2)");
  }
  if (!(gamma > alpha && gamma <= 2.0)) {
    throw std::invalid_argument("moment_constant: requires alpha < gamma <= 2");
  }
  return std::pow(2.0, -gamma + 2.0) * std::pow(2.0, 2.0 - alpha) /
         (std::pow(2.0, gamma - alpha) - 1.0);
}

MomentReport moment_lemma_check(const LevyBasisModel& model, double gamma,
                                std::span<const double> a_grid) {
  model.validate();
  MomentReport out;
  out.gamma = gamma;
  out.alpha = model.alpha;
  out.C_gamma_alpha = moment_constant(gamma, model.alpha);
  out.C_bar = model.mass() / (2.0 - model.alpha);
  out.max_violation = -std::numeric_limits<double>::infinity();
  for (double a : a_grid) {
    MomentRow row;
    row.a = a;
    row.integral = small_jump_integral(model, a, gamma);
    row.bound = out.C_gamma_alpha * out.C_bar * std::pow(a, gamma - model.alpha);
    const double v = (row.integral - row.bound) / row.bound;
    out.max_violation = std::max(out.max_violation, v);
    if (v > 1e-9) {
      ++out.violations;
    }
    out.rows.push_back(row);
  }
  return out;
}

bool Region::contains(double s, double y) const {
  return s >= s_lo && s <= s_hi && y >= y_lo(s) && y <= y_hi(s);
}

Region Region::rectangle(double s_lo, double s_hi, double y_lo, double y_hi) {
  if (!(s_hi > s_lo) || !(y_hi > y_lo)) {
    throw std::invalid_argument("Region::rectangle: empty rectangle");
  }
  Region r;
  r.s_lo = s_lo;
  r.s_hi = s_hi;
  r.y_lo = [y_lo](double) { return y_lo; };
  r.y_hi = [y_hi](double) { return y_hi; };
  r.box_y_lo = y_lo;
  r.box_y_hi = y_hi;
  return r;
}

Region Region::cone(double t, double x, double c, double zeta, double s_lo) {
  if (!(t > s_lo) || !(c > 0.0) || !(zeta >= 0.0)) {
    throw std::invalid_argument("Region::cone: requires t > s_lo, c > 0, zeta >= 0");
  }
  Region r;
  r.s_lo = s_lo;
  r.s_hi = t;
  auto half = [t, c, zeta](double s) { return c * std::pow(std::max(t - s, 0.0), zeta); };
  r.y_lo = [x, half](double s) { return x - half(s); };
  r.y_hi = [x, half](double s) { return x + half(s); };
  const double w = half(s_lo);
  r.box_y_lo = x - w;
  r.box_y_hi = x + w;
  return r;
}

double integrate_region(const Region& region, const Integrand& g, double rel_tol) {
  auto inner = [&](double s) {
    const double lo = region.y_lo(s);
    const double hi = region.y_hi(s);
    if (!(hi > lo)) {
      return 0.0;
    }
    return detail::integrate_gk([&](double y) { return g(s, y); }, lo, hi, rel_tol, 10);
  };
  return detail::integrate_ts(inner, region.s_lo, region.s_hi, rel_tol);
}

double small_jump_variance(const LevyBasisModel& model, double tau) {
  return model.mass() * std::pow(tau, 2.0 - model.alpha) / (2.0 - model.alpha);
}

double truncation_level(const LevyBasisModel& model, const SamplingOptions& options) {
  model.validate();
  if (options.tau > 0.0) {
    return options.tau;
  }
  if (!(options.variance_target > 0.0)) {
    throw std::invalid_argument("truncation_level: variance_target must be positive");
  }
  return std::pow(options.variance_target * (2.0 - model.alpha) / model.mass(),
                  1.0 / (2.0 - model.alpha));
}

double compensator_shift(const LevyBasisModel& model, double tau) {
  const double skew = model.c_plus - model.c_minus;
  if (skew == 0.0) {
    return 0.0;
  }
  // int_tau^1 z^(-alpha) dz
  const double a = model.alpha;
  const double base = (a == 1.0) ? -std::log(tau) : (1.0 - std::pow(tau, 1.0 - a)) / (1.0 - a);
  return skew * base;
}

double sample_jump(const LevyBasisModel& model, double tau, Philox& rng) {
  const double z = tau * std::pow(rng.uniform(), -1.0 / model.alpha);
  return (rng.uniform() * model.mass() < model.c_plus) ? z : -z;
}

std::uint64_t sample_poisson(double mean, Philox& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("sample_poisson: mean must be finite and >= 0");
  }
  if (mean == 0.0) {
    return 0;
  }
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

IntegralSampler::IntegralSampler(LevyBasisModel model, Region region, Integrand f,
                                 SamplingOptions options)
    : model_(model), region_(std::move(region)), f_(std::move(f)) {
  model_.validate();
  tau_ = truncation_level(model_, options);
  rate_ = model_.lambda * model_.mass() * std::pow(tau_, -model_.alpha) / model_.alpha;
  if (!std::isfinite(rate_) || expected_jumps() > options.max_expected_jumps) {
    throw std::invalid_argument("IntegralSampler: expected jumps above tau exceed the budget; "
                                "increase tau or variance_target");
  }
  const double alpha = model_.alpha;
  const double f_alpha =
      integrate_region(region_, [&](double s, double y) { return std::pow(std::abs(f_(s, y)), alpha); });
  if (!std::isfinite(f_alpha)) {
    throw std::invalid_argument("IntegralSampler: integrand is not alpha-integrable");
  }
  f1_ = model_.lambda * integrate_region(region_, f_);
  f2_ = model_.lambda * integrate_region(region_, [&](double s, double y) {
          const double v = f_(s, y);
          return v * v;
        });
  gauss_sd_ = std::sqrt(f2_ * small_jump_variance(model_, tau_));
  shift_ = f1_ * compensator_shift(model_, tau_);
}

double IntegralSampler::sample(Philox& rng) const {
  const std::uint64_t n = sample_poisson(expected_jumps(), rng);
  const double s_span = region_.s_hi - region_.s_lo;
  const double y_span = region_.box_y_hi - region_.box_y_lo;
  double jumps = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double s = region_.s_lo + s_span * rng.uniform();
    const double y = region_.box_y_lo + y_span * rng.uniform();
    const double z = sample_jump(model_, tau_, rng);
    if (region_.contains(s, y)) {
      jumps += f_(s, y) * z;
    }
  }
  return jumps + gauss_sd_ * rng.normal() - shift_;
}

double sample_integral(const LevyBasisModel& model, const Region& region, const Integrand& f,
                       Philox& rng, const SamplingOptions& options) {
  return IntegralSampler(model, region, f, options).sample(rng);
}

double re_psi(const LevyBasisModel& model, const Region& region, const Integrand& f, double xi) {
  model.validate();
  if (xi == 0.0) {
    return 0.0;
  }
  // int (1 - cos(xi f z)) rho(dz) = |f|^alpha int (1 - cos(xi z)) rho(dz) by homogeneity.
  const double alpha = model.alpha;
  const double f_alpha =
      integrate_region(region, [&](double s, double y) { return std::pow(std::abs(f(s, y)), alpha); });
  return model.lambda * f_alpha * cosine_integral(model, xi);
}

CharacteristicExponentReport characteristic_exponent(const LevyBasisModel& model,
                                                     const Region& region, const Integrand& f,
                                                     std::span<const double> xi_grid) {
  model.validate();
  const double alpha = model.alpha;
  const double f_alpha =
      integrate_region(region, [&](double s, double y) { return std::pow(std::abs(f(s, y)), alpha); });
  CharacteristicExponentReport out;
  out.c_lower = std::numeric_limits<double>::infinity();
  for (double xi : xi_grid) {
    const double v = model.lambda * f_alpha * cosine_integral(model, xi);
    out.xi.push_back(std::abs(xi));
    out.re_psi.push_back(v);
    if (xi != 0.0) {
      const double ratio = v / std::pow(std::abs(xi), alpha);
      out.c_lower = std::min(out.c_lower, ratio);
      out.c_upper = std::max(out.c_upper, ratio);
    }
  }
  out.scale = model.lambda * f_alpha * model.mass() * k_alpha(alpha);
  out.fit = mc::fit_scaling(out.xi, out.re_psi);
  out.sandwich_ok = out.fit.flag == mc::FitFlag::ok && out.c_lower > 0.0 &&
                    std::isfinite(out.c_upper) && std::abs(out.fit.slope - alpha) <= 0.03;
  return out;
}

double SmoothedDensity::integral() const {
  if (p.size() < 2) {
    return 0.0;
  }
  mc::CompensatedSum s;
  for (double v : p) {
    s.add(v);
  }
  return dx * (s.value() - 0.5 * (p.front() + p.back()));
}

namespace {

/// Total variation of a sampled smooth function: the sum of differences
/// between consecutive extrema, each refined by a parabola through its three
/// nearest samples. Equals the L1 norm of the derivative.
double total_variation(const std::vector<double>& v) {
  if (v.size() < 3) {
    return 0.0;
  }
  mc::CompensatedSum s;
  double prev = v.front();
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const double left = v[i] - v[i - 1];
    const double right = v[i + 1] - v[i];
    if (left * right < 0.0 || (left != 0.0 && right == 0.0)) {
      const double curv = v[i + 1] - 2.0 * v[i] + v[i - 1];
      const double peak = (curv != 0.0) ? v[i] - 0.125 * (v[i + 1] - v[i - 1]) *
                                                     (v[i + 1] - v[i - 1]) / curv
                                        : v[i];
      s.add(std::abs(peak - prev));
      prev = peak;
    }
  }
  s.add(std::abs(v.back() - prev));
  return s.value();
}

}  // namespace

SmoothedDensity smoothed_density(const LevyBasisModel& model, const Region& region,
                                 const Integrand& f, int n_max) {
  model.validate();
  if (!model.symmetric()) {
    throw std::invalid_argument("smoothed_density: only symmetric jump measures are supported");
  }
  if (n_max < 0 || n_max > 8) {
    throw std::invalid_argument("smoothed_density: n_max must lie in [0, 8]");
  }
  const auto xi_check = mc::geometric_grid(1.0, 100.0, 9);
  const auto report = characteristic_exponent(model, region, f, xi_check);
  if (!(report.scale > 0.0) || report.fit.flag != mc::FitFlag::ok ||
      report.fit.slope < model.alpha - 0.1) {
    throw std::domain_error(
        "smoothed_density: Re Psi does not grow like |xi|^alpha; inversion refused");
  }
  const double A = report.scale;
  const double alpha = model.alpha;
  const double width = std::pow(A, 1.0 / alpha);
  const double xi_max = std::pow(27.7 / A, 1.0 / alpha);
  const double dx = std::min(std::numbers::pi / xi_max, width / 32.0);
  const double reach = 2000.0 * width;
  std::size_t n = 4096;
  while (static_cast<double>(n) * dx < 2.0 * reach) {
    n *= 2;
    if (n > (std::size_t{1} << 22)) {
      throw std::domain_error("smoothed_density: grid would exceed 2^22 points");
    }
  }

  SmoothedDensity out;
  out.scale = A;
  out.dx = dx;
  out.x0 = -0.5 * static_cast<double>(n) * dx;
  const double period = static_cast<double>(n) * dx;
  const auto plan = detail::shared_plan({static_cast<int>(n)});
  std::vector<double> phi(n);
  std::vector<double> xi(n);
  std::vector<double> sign(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = (k < n / 2) ? static_cast<double>(k)
                                  : static_cast<double>(k) - static_cast<double>(n);
    xi[k] = 2.0 * std::numbers::pi * kk / period;
    sign[k] = (k % 2 == 0) ? 1.0 : -1.0;  // exp(-i xi_k x0) with x0 = -period / 2
    phi[k] = (k == n / 2) ? 0.0 : std::exp(-A * std::pow(std::abs(xi[k]), alpha));
  }
  std::vector<std::complex<double>> buf(n);
  std::vector<double> previous;
  for (int order = 0; order <= n_max; ++order) {
    // p^(order)(x_j) = (1/(n dx)) sum_k (-i xi_k)^order phi_k exp(-i xi_k x_j)
    const std::complex<double> unit = std::pow(std::complex<double>(0.0, -1.0), order);
    for (std::size_t k = 0; k < n; ++k) {
      buf[k] = unit * (sign[k] * std::pow(xi[k], order) * phi[k]);
    }
    plan->forward(buf.data());
    std::vector<double> values(n);
    for (std::size_t j = 0; j < n; ++j) {
      values[j] = buf[j].real() / period;
    }
    if (order == 0) {
      mc::CompensatedSum mass;
      for (double v : values) {
        mass.add(std::abs(v));
      }
      out.derivative_l1.push_back(mass.value() * dx);
      out.p = values;
    } else {
      // ||p^(n)||_1 is the total variation of p^(n-1).
      out.derivative_l1.push_back(total_variation(previous));
      out.derivatives.push_back(values);
    }
    previous = std::move(values);
  }
  return out;
}

DerivativeScaling derivative_scaling(const LevyBasisModel& model,
                                     const std::function<Region(double)>& regions,
                                     const Integrand& f, int n, std::span<const double> eps_grid) {
  if (n < 1) {
    throw std::invalid_argument("derivative_scaling: derivative order must be >= 1");
  }
  DerivativeScaling out;
  for (double eps : eps_grid) {
    const auto density = smoothed_density(model, regions(eps), f, n);
    out.eps.push_back(eps);
    out.l1.push_back(density.derivative_l1[static_cast<std::size_t>(n)]);
  }
  out.fit = mc::fit_scaling(out.eps, out.l1);
  return out;
}

}  // namespace ambitlab::levy
