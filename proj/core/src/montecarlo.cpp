#include "ambitlab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace ambitlab::mc {

std::string to_string(FitFlag flag) {
  switch (flag) {
    case FitFlag::ok:
      return "ok";
    case FitFlag::inconclusive:
      return "inconclusive";
    case FitFlag::degenerate:
      return "degenerate";
  }
  return "unknown";
}

double student_t_quantile(double p, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

ScalingFit fit_scaling(std::span<const double> xs, std::span<const double> ys,
                       std::span<const double> stderrs) {
  const std::size_t n = xs.size();
  if (ys.size() != n || (!stderrs.empty() && stderrs.size() != n)) {
    throw std::invalid_argument("fit_scaling: mismatched input lengths");
  }
  if (n < 4) {
    throw std::invalid_argument("fit_scaling: need at least 4 points");
  }
  const bool increasing = xs[1] > xs[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (increasing ? !(xs[i] > xs[i - 1]) : !(xs[i] < xs[i - 1])) {
      throw std::invalid_argument("fit_scaling: abscissae must be strictly monotone");
    }
  }
  if (std::all_of(ys.begin(), ys.end(), [](double y) { return std::abs(y) < 1e-14; })) {
    ScalingFit fit;
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    fit.intercept = std::numeric_limits<double>::quiet_NaN();
    fit.points_used = n;
    fit.flag = FitFlag::degenerate;
    return fit;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw std::invalid_argument("fit_scaling: values must be finite and positive");
    }
  }

  bool weighted = !stderrs.empty() &&
                  std::all_of(stderrs.begin(), stderrs.end(),
                              [](double s) { return s > 0.0 && std::isfinite(s); });
  std::vector<double> lx(n), ly(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    if (weighted) {
      const double rel = stderrs[i] / ys[i];
      w[i] = 1.0 / (rel * rel);
    }
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * lx[i];
    sy += w[i] * ly[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * dy;
    syy += w[i] * dy * dy;
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += w[i] * r * r;
  }
  fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  const double dof = static_cast<double>(n - 2);
  const double slope_se = std::sqrt(ss_res / dof / sxx);
  fit.ci_halfwidth = student_t_quantile(0.975, dof) * slope_se;
  fit.points_used = n;
  return fit;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > 0.0) || points < 2) {
    throw std::invalid_argument("geometric_grid: need positive endpoints and at least 2 points");
  }
  std::vector<double> out(points);
  const double ratio = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = lo * std::exp(ratio * static_cast<double>(i));
  }
  out.back() = hi;
  return out;
}

ScalingFit require_r2(ScalingFit fit, double min_r2) {
  if (fit.flag == FitFlag::ok && fit.r2 < min_r2) {
    fit.flag = FitFlag::inconclusive;
  }
  return fit;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    correction_ += (sum_ - t) + x;
  } else {
    correction_ += (x - t) + sum_;
  }
  sum_ = t;
}

namespace {

double compensated_mean(std::span<const double> values) {
  CompensatedSum s;
  for (double v : values) {
    s.add(v);
  }
  return s.value() / static_cast<double>(values.size());
}

double central_moment(std::span<const double> values, double mean, int order) {
  CompensatedSum s;
  for (double v : values) {
    s.add(std::pow(v - mean, order));
  }
  return s.value() / static_cast<double>(values.size());
}

}  // namespace

Estimate mean_estimate(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("mean_estimate: empty sample");
  }
  const double n = static_cast<double>(values.size());
  const double m = compensated_mean(values);
  if (values.size() < 2) {
    return {m, 0.0};
  }
  return {m, std::sqrt(sample_variance(values) / n)};
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) {
    throw std::invalid_argument("sample_variance: need at least 2 values");
  }
  const double m = compensated_mean(values);
  CompensatedSum s;
  for (double v : values) {
    s.add((v - m) * (v - m));
  }
  return s.value() / static_cast<double>(values.size() - 1);
}

Estimate variance_estimate(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double var = sample_variance(values);
  const double m = compensated_mean(values);
  const double m4 = central_moment(values, m, 4);
  // Var(s^2) ~ (mu4 - sigma^4 (n-3)/(n-1)) / n
  const double v = std::max(0.0, (m4 - var * var * (n - 3.0) / (n - 1.0)) / n);
  return {var, std::sqrt(v)};
}

Estimate skewness_estimate(std::span<const double> values) {
  if (values.size() < 3) {
    throw std::invalid_argument("skewness_estimate: need at least 3 values");
  }
  const double m = compensated_mean(values);
  const double m2 = central_moment(values, m, 2);
  const double m3 = central_moment(values, m, 3);
  const double n = static_cast<double>(values.size());
  return {m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0, std::sqrt(6.0 / n)};
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv("AMBITLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) {
      return static_cast<unsigned>(v);
    }
    throw std::invalid_argument("AMBITLAB_WORKERS must be a positive integer");
  }
  return 1;
}

std::vector<CfPoint> empirical_cf(std::span<const double> values, std::span<const double> xi_grid) {
  if (values.empty()) {
    throw std::invalid_argument("empirical_cf: empty sample");
  }
  std::vector<CfPoint> out;
  out.reserve(xi_grid.size());
  std::vector<double> c(values.size()), s(values.size());
  for (double xi : xi_grid) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      c[i] = std::cos(xi * values[i]);
      s[i] = std::sin(xi * values[i]);
    }
    const Estimate re = mean_estimate(c);
    const Estimate im = mean_estimate(s);
    out.push_back({xi, re.value, im.value, re.std_error, im.std_error});
  }
  return out;
}

double GriddedDensity::integral() const {
  if (values.size() < 2) {
    return 0.0;
  }
  CompensatedSum s;
  for (double v : values) {
    s.add(v);
  }
  return dx * (s.value() - 0.5 * (values.front() + values.back()));
}

GriddedDensity kernel_density(std::span<const double> values, Bandwidth policy) {
  if (values.size() < 100) {
    throw std::invalid_argument("kernel_density: need at least 100 samples");
  }
  GriddedDensity out;
  const double n = static_cast<double>(values.size());
  const double var = sample_variance(values);
  if (!(var > 0.0)) {
    out.degenerate = true;
    return out;
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double h = policy.value;
  if (policy.kind == Bandwidth::Kind::silverman) {
    auto quantile = [&](double p) {
      const double pos = p * (n - 1.0);
      const auto i = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(i);
      return i + 1 < sorted.size() ? sorted[i] * (1.0 - frac) + sorted[i + 1] * frac : sorted[i];
    };
    const double sd = std::sqrt(var);
    const double iqr = quantile(0.75) - quantile(0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    h = 0.9 * spread * std::pow(n, -0.2);
  }
  if (!(h > 0.0)) {
    throw std::invalid_argument("kernel_density: bandwidth must be positive");
  }
  constexpr double kReach = 8.0;
  constexpr std::size_t kMaxPoints = std::size_t{1} << 20;
  const double lo = sorted.front() - kReach * h;
  const double hi = sorted.back() + kReach * h;
  double dx = h / 4.0;
  if ((hi - lo) / dx > static_cast<double>(kMaxPoints - 1)) {
    dx = (hi - lo) / static_cast<double>(kMaxPoints - 1);
  }
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / dx)) + 1;

  std::vector<double> bins(points, 0.0);
  for (double v : values) {
    const double pos = (v - lo) / dx;
    const auto i = std::min(static_cast<std::size_t>(pos), points - 2);
    const double frac = pos - static_cast<double>(i);
    bins[i] += (1.0 - frac) / n;
    bins[i + 1] += frac / n;
  }

  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(kReach * h / dx));
  std::vector<double> kernel(2 * static_cast<std::size_t>(reach) + 1);
  double ksum = 0.0;
  for (std::ptrdiff_t j = -reach; j <= reach; ++j) {
    const double u = static_cast<double>(j) * dx / h;
    kernel[static_cast<std::size_t>(j + reach)] = std::exp(-0.5 * u * u);
    ksum += kernel[static_cast<std::size_t>(j + reach)];
  }
  for (double& k : kernel) {
    k /= ksum * dx;
  }

  out.values.assign(points, 0.0);
  const auto np = static_cast<std::ptrdiff_t>(points);
  for (std::ptrdiff_t i = 0; i < np; ++i) {
    if (bins[static_cast<std::size_t>(i)] == 0.0) {
      continue;
    }
    const double b = bins[static_cast<std::size_t>(i)];
    const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(-reach, -i);
    const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(reach, np - 1 - i);
    for (std::ptrdiff_t j = j0; j <= j1; ++j) {
      out.values[static_cast<std::size_t>(i + j)] += b * kernel[static_cast<std::size_t>(j + reach)];
    }
  }
  out.x0 = lo;
  out.dx = dx;
  out.bandwidth = h;
  return out;
}

namespace {

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) {
    return 1.0;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) {
      break;
    }
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("ks_two_sample: empty sample");
  }
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) {
      ++i;
    }
    while (j < y.size() && y[j] == v) {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace ambitlab::mc
