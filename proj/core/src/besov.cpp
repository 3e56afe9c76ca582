#include "ambitlab/besov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ambitlab::besov {

Stencil make_stencil(int n) {
  if (n < 1 || n > 20) {
    throw std::invalid_argument("make_stencil: order must lie in [1, 20]");
  }
  Stencil st;
  st.n = n;
  st.coefficients.resize(static_cast<std::size_t>(n) + 1);
  std::int64_t binom = 1;
  for (int j = 0; j <= n; ++j) {
    st.coefficients[static_cast<std::size_t>(j)] = ((n - j) % 2 == 0) ? binom : -binom;
    binom = binom * (n - j) / (j + 1);
  }
  return st;
}

std::complex<double> exp_difference(double k, double x, double h, int n) {
  using namespace std::complex_literals;
  const std::complex<double> factor = 2.0i * std::sin(0.5 * k * h) * std::exp(0.5i * k * h);
  return std::exp(1.0i * k * x) * std::pow(factor, n);
}

std::vector<double> default_h_grid(int points) {
  if (points < 1) {
    throw std::invalid_argument("default_h_grid: need at least one point");
  }
  std::vector<double> h(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    h[static_cast<std::size_t>(i)] = std::ldexp(1.0, -i);
  }
  return h;
}

namespace {

double trapezoid_l1(const GriddedFunction& f) {
  const auto& v = f.values;
  if (v.size() < 2) {
    return 0.0;
  }
  mc::CompensatedSum s;
  for (double x : v) {
    s.add(std::abs(x));
  }
  return f.dx * (s.value() - 0.5 * (std::abs(v.front()) + std::abs(v.back())));
}

/// Sample at fractional index `pos`; NaN outside the grid.
double sample_at(const std::vector<double>& v, double pos) {
  const double last = static_cast<double>(v.size() - 1);
  if (pos < -1e-9 || pos > last + 1e-9) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  pos = std::clamp(pos, 0.0, last);
  const double fl = std::floor(pos);
  const auto i = static_cast<std::size_t>(fl);
  const double frac = pos - fl;
  if (frac < 1e-9 || i + 1 >= v.size()) {
    return v[i];
  }
  if (frac > 1.0 - 1e-9) {
    return v[i + 1];
  }
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

double difference_l1(const GriddedFunction& f, double h, const Stencil& st) {
  const double shift = h / f.dx;
  mc::CompensatedSum s;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    double acc = 0.0;
    bool in_range = true;
    for (int j = 0; j <= st.n; ++j) {
      const double v = sample_at(f.values, static_cast<double>(i) + j * shift);
      if (std::isnan(v)) {
        in_range = false;
        break;
      }
      acc += static_cast<double>(st.coefficients[static_cast<std::size_t>(j)]) * v;
    }
    if (in_range) {
      s.add(std::abs(acc));
    }
  }
  return f.dx * s.value();
}

}  // namespace

BesovEstimate besov_norm_estimate(const GriddedFunction& f, double s, int n,
                                  std::span<const double> h_grid) {
  if (!(s > 0.0) || !(n > s)) {
    throw std::invalid_argument("besov_norm_estimate: need n > s > 0");
  }
  if (h_grid.empty()) {
    throw std::invalid_argument("besov_norm_estimate: empty h grid");
  }
  if (!(f.dx > 0.0) || f.values.empty()) {
    throw std::invalid_argument("besov_norm_estimate: invalid grid");
  }
  const Stencil st = make_stencil(n);
  BesovEstimate est;
  est.s = s;
  est.n = n;
  est.h_grid.assign(h_grid.begin(), h_grid.end());
  for (double h : h_grid) {
    if (!(h > 0.0 && h <= 1.0)) {
      throw std::invalid_argument("besov_norm_estimate: h values must lie in (0, 1]");
    }
    if (h < f.dx * (1.0 - 1e-12)) {
      throw std::invalid_argument("besov_norm_estimate: grid spacing exceeds min(h)");
    }
  }
  est.l1_norm = trapezoid_l1(f);
  for (double h : h_grid) {
    est.sup_term = std::max(est.sup_term, std::pow(h, -s) * difference_l1(f, h, st));
  }
  est.total = est.l1_norm + est.sup_term;
  return est;
}

double TestFunction::frequency(double h) const { return resonant ? std::numbers::pi / h : k; }

std::string TestFunction::id() const {
  if (resonant) {
    return "exp(i*pi*x/h)";
  }
  std::ostringstream os;
  os << "exp(i*" << k << "*x)";
  return os.str();
}

double holder_norm(double k, double a) { return 1.0 + std::pow(2.0, 1.0 - a) * std::pow(k, a); }

namespace {

void validate_h_grid(std::span<const double> h_grid) {
  if (h_grid.size() < 2) {
    throw std::invalid_argument("criterion_statistic: need at least two h values");
  }
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (!(h_grid[i] > 0.0 && h_grid[i] <= 1.0)) {
      throw std::invalid_argument("criterion_statistic: h values must lie in (0, 1]");
    }
    if (i > 0 && !(h_grid[i] < h_grid[i - 1])) {
      throw std::invalid_argument("criterion_statistic: h values must be strictly decreasing");
    }
  }
}

mc::ScalingFit flagged_fit(std::size_t points, mc::FitFlag flag) {
  mc::ScalingFit fit;
  fit.slope = std::numeric_limits<double>::quiet_NaN();
  fit.intercept = std::numeric_limits<double>::quiet_NaN();
  fit.r2 = std::numeric_limits<double>::quiet_NaN();
  fit.ci_halfwidth = std::numeric_limits<double>::quiet_NaN();
  fit.points_used = points;
  fit.flag = flag;
  return fit;
}

void fit_window(CriterionStatistic& cs) {
  const auto& h = cs.h_values;
  if (std::all_of(cs.stat_values.begin(), cs.stat_values.end(),
                  [](double v) { return std::abs(v) < 1e-14; })) {
    cs.fitted_exponent = flagged_fit(h.size(), mc::FitFlag::degenerate);
    return;
  }
  double h_star = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (cs.significant[i]) {
      h_star = h[i];  // h decreasing, so the last significant one is the smallest
    }
  }
  std::vector<double> xs, ys, ses;
  if (h_star > 0.0) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (cs.significant[i] && h[i] <= 10.0 * h_star * (1.0 + 1e-12)) {
        xs.push_back(h[i]);
        ys.push_back(cs.stat_values[i]);
        ses.push_back(cs.stat_stderr[i]);
      }
    }
  }
  if (xs.size() < 4) {
    cs.fitted_exponent = flagged_fit(xs.size(), mc::FitFlag::inconclusive);
    return;
  }
  cs.fitted_exponent = mc::require_r2(mc::fit_scaling(xs, ys, ses), 0.9);
}

}  // namespace

CriterionStatistic criterion_statistic(std::span<const WeightedSample> samples, int n,
                                       std::span<const double> h_grid, const TestFunction& phi,
                                       double holder_order) {
  if (samples.empty()) {
    throw std::invalid_argument("criterion_statistic: empty sample");
  }
  for (const auto& s : samples) {
    if (!std::isfinite(s.weight) || !std::isfinite(s.value)) {
      throw std::invalid_argument("criterion_statistic: non-finite weight or value");
    }
  }
  if (n < 1 || n > 20) {
    throw std::invalid_argument("criterion_statistic: order must lie in [1, 20]");
  }
  if (!(holder_order > 0.0 && holder_order <= 1.0)) {
    throw std::invalid_argument("criterion_statistic: Holder order must lie in (0, 1]");
  }
  validate_h_grid(h_grid);

  CriterionStatistic cs;
  cs.test_function_id = phi.id();
  cs.h_values.assign(h_grid.begin(), h_grid.end());
  const std::size_t count = samples.size();
  std::vector<double> re(count), im(count);
  double cached_k = std::numeric_limits<double>::quiet_NaN();
  mc::Estimate mre, mim;
  for (double h : h_grid) {
    const double k = phi.frequency(h);
    if (k != cached_k) {
      for (std::size_t i = 0; i < count; ++i) {
        re[i] = samples[i].weight * std::cos(k * samples[i].value);
        im[i] = samples[i].weight * std::sin(k * samples[i].value);
      }
      mre = mc::mean_estimate(re);
      mim = mc::mean_estimate(im);
      cached_k = k;
    }
    // Delta_h^n exp(ikx) = exp(ikx) * c(h) exactly, so only |c(h)| scales the mean
    const double scale = std::pow(std::abs(2.0 * std::sin(0.5 * k * h)), n) / holder_norm(k, holder_order);
    const double stat = scale * std::hypot(mre.value, mim.value);
    const double se = scale * std::hypot(mre.std_error, mim.std_error);
    cs.stat_values.push_back(stat);
    cs.stat_stderr.push_back(se);
    cs.significant.push_back(stat > 0.0 && stat > 3.0 * se);
  }
  fit_window(cs);
  return cs;
}

CriterionReport criterion_family(std::span<const WeightedSample> samples,
                                 const CriterionOptions& options) {
  CriterionReport report;
  report.holder_order = options.holder_order;
  for (double k : options.frequencies) {
    if (!(k > 0.0)) {
      throw std::invalid_argument("criterion_family: frequencies must be positive");
    }
    report.members.push_back(criterion_statistic(samples, options.n, options.h_grid,
                                                 TestFunction{k, false}, options.holder_order));
  }
  if (options.include_resonant) {
    report.members.push_back(criterion_statistic(samples, options.n, options.h_grid,
                                                 TestFunction{0.0, true}, options.holder_order));
  }
  if (report.members.empty()) {
    throw std::invalid_argument("criterion_family: empty test family");
  }
  CriterionStatistic& env = report.envelope;
  env.test_function_id = "envelope";
  env.h_values = options.h_grid;
  for (std::size_t i = 0; i < env.h_values.size(); ++i) {
    double best = 0.0, best_se = 0.0;
    bool any = false;
    for (const auto& m : report.members) {
      if (m.significant[i] && m.stat_values[i] > best) {
        best = m.stat_values[i];
        best_se = m.stat_stderr[i];
        any = true;
      }
    }
    if (!any) {
      for (const auto& m : report.members) {
        if (m.stat_values[i] > best) {
          best = m.stat_values[i];
          best_se = m.stat_stderr[i];
        }
      }
    }
    env.stat_values.push_back(best);
    env.stat_stderr.push_back(best_se);
    env.significant.push_back(any);
  }
  fit_window(env);
  const auto& fit = env.fitted_exponent;
  report.density_verdict = fit.ok() && fit.slope - fit.ci_halfwidth > options.holder_order;
  return report;
}

}  // namespace ambitlab::besov
