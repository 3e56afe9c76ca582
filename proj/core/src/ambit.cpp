#include "ambitlab/ambit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace ambitlab::ambit {

void ConeSet::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("ConeSet: c must be finite and positive");
  }
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) {
    throw std::invalid_argument("ConeSet: zeta must be finite and >= 0");
  }
}

double ConeSet::half_width(double t, double s) const {
  return c * std::pow(std::max(t - s, 0.0), zeta);
}

levy::Region ConeSet::region(double t, double x, double s_lo) const {
  return levy::Region::cone(t, x, c, zeta, s_lo);
}

double Kernel::operator()(double t, double s, double x, double y) const {
  switch (kind) {
    case Kind::constant:
      return a;
    case Kind::power:
      return a * std::pow(t - s, -p);
    case Kind::gauss: {
      const double r = (x - y) / p;
      return a * std::exp(-0.5 * r * r);
    }
  }
  return 0.0;
}

void Kernel::validate() const {
  if (!std::isfinite(a)) {
    throw std::invalid_argument("Kernel: amplitude must be finite");
  }
  if (kind == Kind::power && !(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("Kernel: power exponent theta must lie in [0, 1)");
  }
  if (kind == Kind::gauss && !(p > 0.0)) {
    throw std::invalid_argument("Kernel: gauss width must be positive");
  }
}

std::string Kernel::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::constant:
      os << "const:" << a;
      break;
    case Kind::power:
      os << "power:" << a << ',' << p;
      break;
    case Kind::gauss:
      os << "gauss:" << a << ',' << p;
      break;
  }
  return os.str();
}

Kernel Kernel::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("Kernel: expected name:values, got '" + text + "'");
  }
  const std::string name = text.substr(0, colon);
  std::vector<double> v;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw std::invalid_argument("Kernel: bad number '" + item + "' in '" + text + "'");
    }
    v.push_back(value);
  }
  Kernel k;
  if (name == "const" && v.size() == 1) {
    k = constant(v[0]);
  } else if (name == "power" && v.size() == 2) {
    k = {Kind::power, v[0], v[1]};
  } else if (name == "gauss" && v.size() == 2) {
    k = {Kind::gauss, v[0], v[1]};
  } else {
    throw std::invalid_argument("Kernel: unknown kernel '" + text +
                                "' (const:a, power:a,theta, gauss:a,ell)");
  }
  k.validate();
  return k;
}

void AmbitSpec::validate() const {
  A.validate();
  B.validate();
  g.validate();
  h.validate();
  sigma.validate();
  b.validate();
  if (!std::isfinite(x0)) {
    throw std::invalid_argument("AmbitSpec: x0 must be finite");
  }
  if (!(delta1 > 0.0 && delta1 <= 1.0) || !(delta2 > 0.0 && delta2 <= 1.0)) {
    throw std::invalid_argument("AmbitSpec: delta1 and delta2 must lie in (0, 1]");
  }
  for (const auto* f : {&sigma, &b}) {
    if (!f->is_constant() && (f->h_time < delta1 - 1e-12 || f->h_space < delta2 - 1e-12)) {
      throw std::invalid_argument(
          "AmbitSpec: declared Holder exponents exceed those of the sigma or b field");
    }
  }
}

std::string AmbitSpec::describe() const {
  std::ostringstream os;
  os << "A=cone(c=" << A.c << ",zeta=" << A.zeta << ") B=cone(c=" << B.c << ",zeta=" << B.zeta
     << ") g=" << g.describe() << " h=" << h.describe() << " sigma=" << sigma.describe()
     << " b=" << b.describe() << " x0=" << x0 << " delta1=" << delta1 << " delta2=" << delta2;
  return os.str();
}

double default_beta(double alpha) { return 0.5 * alpha + 0.45 * std::min(alpha, 1.0); }

double default_gamma(double alpha) { return std::min(2.0, alpha + 0.5); }

double c_tilde(const levy::AssumptionConstants& constants, double beta) {
  const double c1 = (constants.alpha > 1.0) ? constants.C_beta(1.0) : 0.0;
  return std::max(constants.C_bar, constants.C_beta(beta) + c1);
}

namespace {

void check_kernel_integrability(const Kernel& g, const ConeSet& A, double alpha, const char* what) {
  if (g.kind != Kernel::Kind::power || g.is_zero()) {
    return;
  }
  const double limit = std::min(1.0 / alpha, 0.5 * (1.0 + A.zeta));
  if (!(g.p < limit)) {
    std::ostringstream os;
    os << what << ": power kernel exponent must be below min(1/alpha, (1 + zeta)/2) = " << limit;
    throw std::invalid_argument(os.str());
  }
}

mc::ScalingFit rescale(mc::ScalingFit fit, double by) {
  fit.slope /= by;
  fit.ci_halfwidth /= by;
  return fit;
}

mc::ScalingFit absent_fit() {
  mc::ScalingFit fit;
  fit.slope = std::numeric_limits<double>::infinity();
  fit.flag = mc::FitFlag::degenerate;
  return fit;
}

}  // namespace

ExponentBundle exponent_conditions(const AmbitSpec& spec, const levy::LevyBasisModel& model,
                                   double t, double x, std::span<const double> eps_grid,
                                   double beta, double gamma) {
  spec.validate();
  model.validate();
  const double alpha = model.alpha;
  if (!(beta > 0.0 && beta < alpha)) {
    throw std::invalid_argument("exponent_conditions: beta must lie in (0, alpha)");
  }
  if (!(gamma > alpha && gamma <= 2.0)) {
    throw std::invalid_argument("exponent_conditions: gamma must lie in (alpha, 2]");
  }
  if (!(t > 0.0) || eps_grid.size() < 4) {
    throw std::invalid_argument("exponent_conditions: need t > 0 and at least 4 eps values");
  }
  for (double e : eps_grid) {
    if (!(e > 0.0 && e <= t)) {
      throw std::invalid_argument("exponent_conditions: every eps must lie in (0, t]");
    }
  }
  check_kernel_integrability(spec.g, spec.A, alpha, "exponent_conditions");

  const auto constants = levy::assumption_constants(model);
  ExponentBundle out;
  out.alpha = alpha;
  out.beta = beta;
  out.gamma = gamma;
  out.beta_h = (alpha > 1.0 && beta >= 1.0) ? beta : 1.0;
  out.c_tilde = c_tilde(constants, beta);
  out.c_lower = constants.c_lower;
  const double c_bar = std::max(constants.C_bar, constants.C_beta(0.0));
  const double lam = model.lambda;
  const double d1 = spec.delta1;
  const double d2 = spec.delta2;
  const double bh = out.beta_h;

  auto checked = [&](const levy::Region& region, const levy::Integrand& f, const char* name) {
    const double coarse = levy::integrate_region(region, f, 1e-8);
    const double fine = levy::integrate_region(region, f, 1e-11);
    if (!std::isfinite(coarse) || !std::isfinite(fine)) {
      throw std::domain_error(std::string("exponent_conditions: the ") + name +
                              " integral is not finite");
    }
    if (std::abs(coarse - fine) > 0.01 * std::abs(fine)) {
      throw std::runtime_error(std::string("exponent_conditions: quadrature of the ") + name +
                               " integral did not settle under tolerance refinement");
    }
    return fine;
  };

  const bool drift = spec.has_drift();
  for (double eps : eps_grid) {
    const double s_lo = t - eps;
    const auto A = spec.A.region(t, x, s_lo);
    auto g = [&](double s, double y) { return std::abs(spec.g(t, s, x, y)); };
    out.eps.push_back(eps);
    out.lower.push_back(checked(A, [&](double s, double y) {
      return lam * out.c_lower * std::pow(g(s, y), alpha);
    }, "lower slab"));
    out.plain.push_back(checked(A, [&](double s, double y) {
      return lam * out.c_tilde * std::pow(g(s, y), gamma);
    }, "plain slab"));
    out.time_holder.push_back(checked(A, [&](double s, double y) {
      return lam * out.c_tilde * std::pow(g(s, y), gamma) * std::pow(s - s_lo, d1 * gamma);
    }, "time Holder"));
    out.space_holder.push_back(checked(A, [&](double s, double y) {
      return lam * out.c_tilde * std::pow(g(s, y), gamma) * std::pow(std::abs(x - y), d2 * gamma);
    }, "space Holder"));
    if (drift) {
      const auto B = spec.B.region(t, x, s_lo);
      auto h = [&](double s, double y) { return std::abs(spec.h(t, s, x, y)); };
      out.drift_time.push_back(checked(B, [&](double s, double y) {
        return std::pow(h(s, y), bh) * std::pow(s - s_lo, d1 * bh);
      }, "drift time Holder"));
      out.drift_space.push_back(checked(B, [&](double s, double y) {
        return std::pow(h(s, y), bh) * std::pow(std::abs(x - y), d2 * bh);
      }, "drift space Holder"));
    }
  }
  const double eps_max = *std::max_element(eps_grid.begin(), eps_grid.end());
  out.integrability = checked(spec.A.region(t, x, t - eps_max), [&](double s, double y) {
    return lam * c_bar * std::pow(std::abs(spec.g(t, s, x, y)), alpha);
  }, "integrability");

  const double r2 = 0.99;
  out.gamma0 = mc::require_r2(mc::fit_scaling(out.eps, out.lower), r2);
  out.gamma1_bar = rescale(mc::require_r2(mc::fit_scaling(out.eps, out.plain), r2), gamma);
  out.gamma1 = rescale(mc::require_r2(mc::fit_scaling(out.eps, out.time_holder), r2), gamma);
  out.gamma2 = rescale(mc::require_r2(mc::fit_scaling(out.eps, out.space_holder), r2), gamma);
  if (drift) {
    out.gamma3 = rescale(mc::require_r2(mc::fit_scaling(out.eps, out.drift_time), r2), bh);
    out.gamma4 = rescale(mc::require_r2(mc::fit_scaling(out.eps, out.drift_space), r2), bh);
  } else {
    out.gamma3 = absent_fit();
    out.gamma4 = absent_fit();
  }
  out.gammabar = std::min({out.gamma1.slope, out.gamma2.slope, out.gamma3.slope, out.gamma4.slope});
  bool fits_ok = out.gamma0.ok() && out.gamma1.ok() && out.gamma2.ok();
  if (drift) {
    fits_ok = fits_ok && out.gamma3.ok() && out.gamma4.ok();
  }
  out.verdict = fits_ok && out.gamma0.slope > 0.0 && out.gammabar / out.gamma0.slope > 1.0 / alpha;
  return out;
}

struct AmbitEvaluator::Cells {
  struct Gauss {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double sd = 0.0;  // sqrt(lambda v(tau_row) int g^2)
    double g1 = 0.0;  // lambda int g
  };
  struct Drift {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double h = 0.0;   // int h
  };
  std::vector<double> tau;
  std::vector<double> shift;
  std::vector<double> box_mean;  // expected jumps in the row bounding box
  std::vector<double> row_ylo;
  std::vector<double> row_yhi;
  std::vector<Gauss> gauss;      // sorted by row
  std::vector<std::size_t> gauss_begin;  // per row offsets, size rows + 1
  std::vector<Gauss> gauss_rows;  // aggregated per row (constant sigma)
  std::vector<Drift> drift;
  std::vector<double> drift_row;  // row sums of int h
  bool sigma_constant = true;
  bool b_constant = true;
  bool active = false;  // g not identically zero
};

namespace {

/// int over ([s0,s1] x [ya,yb]) intersected with the cone of F(s, y).
template <class F>
double cell_integral(const ConeSet& cone, double t, double x, double s0, double s1, double ya,
                     double yb, F&& f) {
  using GL = boost::math::quadrature::gauss<double, 8>;
  std::vector<double> cuts{s0, s1};
  if (cone.zeta > 0.0) {
    for (double d : {std::abs(ya - x), std::abs(yb - x)}) {
      if (d > 0.0) {
        const double s = t - std::pow(d / cone.c, 1.0 / cone.zeta);
        if (s > s0 && s < s1) {
          cuts.push_back(s);
        }
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  auto slice = [&](double s) {
    const double w = cone.half_width(t, s);
    const double lo = std::max(ya, x - w);
    const double hi = std::min(yb, x + w);
    if (!(hi > lo)) {
      return 0.0;
    }
    return GL::integrate([&](double y) { return f(s, y); }, lo, hi);
  };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double p0 = cuts[k];
    const double p1 = cuts[k + 1];
    if (!(p1 > p0)) {
      continue;
    }
    if (p1 >= t) {
      // s = p1 - L v^4 smooths integrable singularities at s = t.
      const double len = p1 - p0;
      total += GL::integrate(
          [&](double v) {
            const double v3 = v * v * v;
            return slice(p1 - len * v3 * v) * 4.0 * len * v3;
          },
          0.0, 1.0);
    } else {
      total += GL::integrate(slice, p0, p1);
    }
  }
  return total;
}

}  // namespace

AmbitEvaluator::AmbitEvaluator(AmbitSpec spec, levy::LevyBasisModel model, double t, double x,
                               Discretization disc)
    : spec_(std::move(spec)), model_(model), t_(t), x_(x), disc_(disc) {
  spec_.validate();
  model_.validate();
  if (!(t > 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument("AmbitEvaluator: need t > 0 and finite x");
  }
  if (disc.time_cells < 1 || disc.space_cells < 2 || disc.space_cells % 2 != 0) {
    throw std::invalid_argument(
        "AmbitEvaluator: need time_cells >= 1 and an even space_cells >= 2");
  }
  if (!(disc.jumps_per_row > 0.0)) {
    throw std::invalid_argument("AmbitEvaluator: jumps_per_row must be positive");
  }
  check_kernel_integrability(spec_.g, spec_.A, model_.alpha, "AmbitEvaluator");
  const double alpha = model_.alpha;
  const bool drift = spec_.has_drift();
  double w = spec_.A.half_width(t, 0.0);
  if (drift) {
    w = std::max(w, spec_.B.half_width(t, 0.0));
  }
  const std::size_t ns = disc.time_cells;
  const std::size_t ny = disc.space_cells;
  ds_ = t / static_cast<double>(ns);
  dy_ = 2.0 * w / static_cast<double>(ny);
  y0_ = x - w;

  cells_ = std::make_unique<Cells>();
  Cells& c = *cells_;
  c.sigma_constant = spec_.sigma.is_constant();
  c.b_constant = spec_.b.is_constant();
  c.active = !spec_.g.is_zero() && !(c.sigma_constant && spec_.sigma.level == 0.0);
  c.tau.assign(ns, 0.0);
  c.shift.assign(ns, 0.0);
  c.box_mean.assign(ns, 0.0);
  c.row_ylo.assign(ns, x);
  c.row_yhi.assign(ns, x);
  c.gauss_begin.assign(ns + 1, 0);
  c.gauss_rows.resize(ns);
  c.drift_row.assign(ns, 0.0);
  const double lam = model_.lambda;
  const double mass = model_.mass();
  const double J = disc.jumps_per_row;
  const ConeSet& A = spec_.A;

  for (std::size_t i = 0; i < ns; ++i) {
    const double s0 = ds_ * static_cast<double>(i);
    const double s1 = (i + 1 == ns) ? t : ds_ * static_cast<double>(i + 1);
    c.gauss_begin[i] = c.gauss.size();
    c.gauss_rows[i].row = static_cast<std::uint32_t>(i);
    if (c.active) {
      const double z1 = A.zeta + 1.0;
      const double area =
          2.0 * A.c * (std::pow(t - s0, z1) - std::pow(std::max(t - s1, 0.0), z1)) / z1;
      const double hw = std::min(A.half_width(t, s0), w);
      c.row_ylo[i] = x - hw;
      c.row_yhi[i] = x + hw;
      c.tau[i] = std::pow(lam * area * mass / (alpha * J), 1.0 / alpha);
      c.box_mean[i] = J * (s1 - s0) * 2.0 * hw / area;
      c.shift[i] = levy::compensator_shift(model_, c.tau[i]);
      const double v = lam * levy::small_jump_variance(model_, c.tau[i]);
      const std::size_t j_lo = static_cast<std::size_t>(std::max(0.0, std::floor((x - hw - y0_) / dy_)));
      const std::size_t j_hi = std::min(ny, static_cast<std::size_t>(std::ceil((x + hw - y0_) / dy_)));
      double row_var = 0.0;
      double row_g1 = 0.0;
      for (std::size_t j = j_lo; j < j_hi; ++j) {
        const double ya = y0_ + dy_ * static_cast<double>(j);
        const double yb = ya + dy_;
        const double g2 = cell_integral(A, t, x, s0, s1, ya, yb, [&](double s, double y) {
          const double gv = spec_.g(t, s, x, y);
          return gv * gv;
        });
        if (!(g2 > 0.0)) {
          continue;
        }
        double g1 = 0.0;
        if (c.shift[i] != 0.0) {
          g1 = lam * cell_integral(A, t, x, s0, s1, ya, yb,
                                   [&](double s, double y) { return spec_.g(t, s, x, y); });
        }
        c.gauss.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                           std::sqrt(v * g2), g1});
        row_var += v * g2;
        row_g1 += g1;
      }
      c.gauss_rows[i].sd = std::sqrt(row_var);
      c.gauss_rows[i].g1 = row_g1;
    }
    if (drift) {
      const double hw = std::min(spec_.B.half_width(t, s0), w);
      const std::size_t j_lo = static_cast<std::size_t>(std::max(0.0, std::floor((x - hw - y0_) / dy_)));
      const std::size_t j_hi = std::min(ny, static_cast<std::size_t>(std::ceil((x + hw - y0_) / dy_)));
      for (std::size_t j = j_lo; j < j_hi; ++j) {
        const double ya = y0_ + dy_ * static_cast<double>(j);
        const double hv = cell_integral(spec_.B, t, x, s0, s1, ya, ya + dy_,
                                        [&](double s, double y) { return spec_.h(t, s, x, y); });
        if (hv != 0.0) {
          c.drift.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), hv});
          c.drift_row[i] += hv;
        }
      }
    }
  }
  c.gauss_begin[ns] = c.gauss.size();

  const holder::FieldGrid grid{0.0, ds_, ns, y0_, dy_, ny};
  sigma_sampler_ = std::make_unique<holder::FieldSampler>(spec_.sigma, grid);
  b_sampler_ = std::make_unique<holder::FieldSampler>(spec_.b, grid);
}

AmbitEvaluator::~AmbitEvaluator() = default;
AmbitEvaluator::AmbitEvaluator(AmbitEvaluator&&) noexcept = default;

const std::vector<double>& AmbitEvaluator::tau() const { return cells_->tau; }

JumpRecord AmbitEvaluator::draw(Philox& rng) const {
  const Cells& c = *cells_;
  JumpRecord rec;
  rec.sigma = sigma_sampler_->sample(rng);
  rec.b = b_sampler_->sample(rng);
  if (!c.active) {
    return rec;
  }
  const std::size_t ns = disc_.time_cells;
  const std::size_t ny = disc_.space_cells;
  for (std::size_t i = 0; i < ns; ++i) {
    const std::uint64_t n = levy::sample_poisson(c.box_mean[i], rng);
    const double s0 = ds_ * static_cast<double>(i);
    const double yspan = c.row_yhi[i] - c.row_ylo[i];
    for (std::uint64_t k = 0; k < n; ++k) {
      const double s = std::min(s0 + ds_ * rng.uniform(), t_);
      const double y = c.row_ylo[i] + yspan * rng.uniform();
      const double z = levy::sample_jump(model_, c.tau[i], rng);
      if (std::abs(y - x_) > spec_.A.half_width(t_, s)) {
        continue;
      }
      const auto col = std::min<std::size_t>(
          ny - 1, static_cast<std::size_t>(std::max(0.0, std::floor((y - y0_) / dy_))));
      rec.jumps.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(col),
                           spec_.g(t_, s, x_, y) * z});
    }
  }
  const std::size_t normals = c.sigma_constant ? ns : c.gauss.size();
  rec.normals.resize(normals);
  for (double& v : rec.normals) {
    v = rng.normal();
  }
  return rec;
}

PathSums AmbitEvaluator::sums(const JumpRecord& record) const {
  const Cells& c = *cells_;
  const std::size_t ns = disc_.time_cells;
  PathSums out;
  out.x0 = spec_.x0;
  out.noise.assign(ns, 0.0);
  out.unit_noise.assign(ns, 0.0);
  out.drift.assign(ns, 0.0);
  if (c.active) {
    for (const auto& jump : record.jumps) {
      out.unit_noise[jump.row] += jump.weight;
      if (!c.sigma_constant) {
        out.noise[jump.row] += record.sigma.cell(jump.row, jump.col) * jump.weight;
      }
    }
    if (c.sigma_constant) {
      for (std::size_t i = 0; i < ns; ++i) {
        const auto& g = c.gauss_rows[i];
        out.unit_noise[i] += g.sd * record.normals[i] - c.shift[i] * g.g1;
        out.noise[i] = spec_.sigma.level * out.unit_noise[i];
      }
    } else {
      for (std::size_t k = 0; k < c.gauss.size(); ++k) {
        const auto& g = c.gauss[k];
        const double u = g.sd * record.normals[k] - c.shift[g.row] * g.g1;
        out.unit_noise[g.row] += u;
        out.noise[g.row] += record.sigma.cell(g.row, g.col) * u;
      }
    }
  }
  if (c.b_constant) {
    for (std::size_t i = 0; i < ns; ++i) {
      out.drift[i] = spec_.b.level * c.drift_row[i];
    }
  } else {
    for (const auto& d : c.drift) {
      out.drift[d.row] += record.b.cell(d.row, d.col) * d.h;
    }
  }
  return out;
}

double AmbitEvaluator::evaluate(const JumpRecord& record) const {
  const PathSums s = sums(record);
  double total = 0.0;
  for (std::size_t i = 0; i < s.noise.size(); ++i) {
    total += s.noise[i] + s.drift[i];
  }
  return s.x0 + total;
}

std::size_t AmbitEvaluator::slab_rows(double eps) const {
  if (!(eps > 0.0) || eps > t_ * (1.0 + 1e-12)) {
    throw std::invalid_argument("AmbitEvaluator: eps must lie in (0, t]");
  }
  const auto k = static_cast<std::size_t>(std::llround(eps / ds_));
  return std::clamp<std::size_t>(k, 1, disc_.time_cells);
}

PairedValue AmbitEvaluator::pair_from(const JumpRecord& record, const PathSums& s,
                                      std::size_t k) const {
  const Cells& c = *cells_;
  const std::size_t ns = disc_.time_cells;
  const std::size_t i0 = ns - k;
  const std::size_t center = disc_.space_cells / 2;
  const double sigma0 = record.sigma.node(i0, center);
  const double b0 = record.b.node(i0, center);
  double history = 0.0;
  double all = 0.0;
  for (std::size_t i = 0; i < ns; ++i) {
    all += s.noise[i] + s.drift[i];
    if (i < i0) {
      history += s.noise[i] + s.drift[i];
    }
  }
  double unit_slab = 0.0;
  double h_slab = 0.0;
  double gap = 0.0;
  for (std::size_t i = i0; i < ns; ++i) {
    unit_slab += s.unit_noise[i];
    h_slab += c.drift_row[i];
    gap += (s.noise[i] - sigma0 * s.unit_noise[i]) + (s.drift[i] - b0 * c.drift_row[i]);
  }
  PairedValue out;
  out.eps = ds_ * static_cast<double>(k);
  out.x = s.x0 + all;
  out.u_eps = s.x0 + history + b0 * h_slab;
  out.x_eps = out.u_eps + sigma0 * unit_slab;
  out.gap = gap;
  return out;
}

PairedValue AmbitEvaluator::evaluate_pair(const JumpRecord& record, double eps) const {
  const std::size_t k = slab_rows(eps);
  const PathSums s = sums(record);
  PairedValue out = pair_from(record, s, k);

  const Cells& c = *cells_;
  const std::size_t ns = disc_.time_cells;
  const std::size_t i0 = ns - k;
  const std::size_t center = disc_.space_cells / 2;
  const double sigma0 = record.sigma.node(i0, center);
  const double b0 = record.b.node(i0, center);
  double bound = 0.0;
  for (const auto& jump : record.jumps) {
    if (jump.row >= i0) {
      bound += std::abs(jump.weight) * std::abs(record.sigma.cell(jump.row, jump.col) - sigma0);
    }
  }
  double gauss_gap = 0.0;
  if (c.active) {
    if (c.sigma_constant) {
      for (std::size_t i = i0; i < ns; ++i) {
        const double u = c.gauss_rows[i].sd * record.normals[i] - c.shift[i] * c.gauss_rows[i].g1;
        gauss_gap += (spec_.sigma.level - sigma0) * u;
      }
    } else {
      for (std::size_t q = c.gauss_begin[i0]; q < c.gauss.size(); ++q) {
        const auto& g = c.gauss[q];
        const double u = g.sd * record.normals[q] - c.shift[g.row] * g.g1;
        gauss_gap += (record.sigma.cell(g.row, g.col) - sigma0) * u;
      }
    }
  }
  double drift_gap = 0.0;
  if (c.b_constant) {
    for (std::size_t i = i0; i < ns; ++i) {
      drift_gap += (spec_.b.level - b0) * c.drift_row[i];
    }
  } else {
    for (const auto& d : c.drift) {
      if (d.row >= i0) {
        drift_gap += (record.b.cell(d.row, d.col) - b0) * d.h;
      }
    }
  }
  out.coupling_bound = bound + std::abs(gauss_gap) + std::abs(drift_gap);
  return out;
}

double AmbitEvaluator::u_eps(const JumpRecord& record, double eps) const {
  const std::size_t k = slab_rows(eps);
  return pair_from(record, sums(record), k).u_eps;
}

double AmbitEvaluator::sigma_at_point(const JumpRecord& record) const {
  return record.sigma.node(disc_.time_cells, disc_.space_cells / 2);
}

JumpRecord AmbitEvaluator::erase_slab(const JumpRecord& record, double eps) const {
  const Cells& c = *cells_;
  const std::size_t i0 = disc_.time_cells - slab_rows(eps);
  JumpRecord out = record;
  std::erase_if(out.jumps, [i0](const JumpRecord::Jump& j) { return j.row >= i0; });
  if (c.sigma_constant) {
    for (std::size_t i = i0; i < out.normals.size(); ++i) {
      out.normals[i] = 0.0;
    }
  } else {
    for (std::size_t q = c.gauss_begin[i0]; q < out.normals.size(); ++q) {
      out.normals[q] = 0.0;
    }
  }
  return out;
}

double evaluate(const AmbitSpec& spec, const levy::LevyBasisModel& model, double t, double x,
                Philox& rng, const Discretization& disc) {
  const AmbitEvaluator ev(spec, model, t, x, disc);
  return ev.evaluate(ev.draw(rng));
}

PairedValue evaluate_approx(const AmbitEvaluator& evaluator, const JumpRecord& record, double eps) {
  return evaluator.evaluate_pair(record, eps);
}

std::vector<double> simulate_values(const AmbitSpec& spec, const levy::LevyBasisModel& model,
                                    double t, double x, const EnsembleOptions& options,
                                    const Discretization& disc) {
  const AmbitEvaluator ev(spec, model, t, x, disc);
  return mc::run_paths(options.n_paths, mc::resolve_workers(options.workers), options.seed,
                       options.experiment,
                       [&](Philox& rng, std::size_t) { return ev.evaluate(ev.draw(rng)); });
}

DecayReport error_decay(const AmbitSpec& spec, const levy::LevyBasisModel& model, double t,
                        double x, double beta, std::span<const double> eps_grid,
                        const EnsembleOptions& options, const Discretization& disc) {
  const double alpha = model.alpha;
  if (!(beta > 0.0 && beta < alpha)) {
    throw std::invalid_argument("error_decay: beta must lie in (0, alpha)");
  }
  if (eps_grid.size() < 4 || options.n_paths < 2) {
    throw std::invalid_argument("error_decay: need at least 4 eps values and 2 paths");
  }
  const auto bundle = exponent_conditions(spec, model, t, x, eps_grid, beta, default_gamma(alpha));
  const AmbitEvaluator ev(spec, model, t, x, disc);
  std::vector<std::size_t> rows;
  DecayReport out;
  for (double e : eps_grid) {
    const std::size_t k = ev.slab_rows(e);
    if (!rows.empty() && k == rows.back()) {
      throw std::invalid_argument("error_decay: two eps values round to the same number of rows");
    }
    rows.push_back(k);
    out.eps.push_back(ev.row_width() * static_cast<double>(k));
  }
  const std::size_t n = options.n_paths;
  std::vector<std::vector<double>> samples(rows.size(), std::vector<double>(n));
  mc::parallel_for(n, mc::resolve_workers(options.workers), [&](std::size_t path, unsigned) {
    Philox rng(StreamKey{options.seed, options.experiment, path});
    const JumpRecord rec = ev.draw(rng);
    const PathSums s = ev.sums(rec);
    for (std::size_t l = 0; l < rows.size(); ++l) {
      samples[l][path] = std::pow(std::abs(ev.pair_from(rec, s, rows[l]).gap), beta);
    }
  });
  for (const auto& v : samples) {
    const auto est = mc::mean_estimate(v);
    out.moments.push_back(est.value);
    out.std_error.push_back(est.std_error);
  }
  bool zero = true;
  for (double m : out.moments) {
    zero = zero && m < 1e-14;
  }
  out.fit = zero ? mc::fit_scaling(out.eps, out.moments)
                 : mc::fit_scaling(out.eps, out.moments, out.std_error);
  if (out.fit.ok() && out.fit.ci_halfwidth > 0.3) {
    out.fit.flag = mc::FitFlag::inconclusive;
  }
  out.gammabar = bundle.gammabar;
  out.target_rate = beta * (1.0 / alpha + bundle.gammabar) - 1.0;
  out.pass = out.fit.ok() && out.fit.slope >= out.target_rate - 0.15;
  return out;
}

besov::CriterionReport density_criterion_experiment(const AmbitSpec& spec,
                                                    const levy::LevyBasisModel& model, double t,
                                                    double x,
                                                    const besov::CriterionOptions& criterion,
                                                    const EnsembleOptions& options,
                                                    const Discretization& disc) {
  const AmbitEvaluator ev(spec, model, t, x, disc);
  std::vector<besov::WeightedSample> samples(options.n_paths);
  mc::parallel_for(options.n_paths, mc::resolve_workers(options.workers),
                   [&](std::size_t path, unsigned) {
                     Philox rng(StreamKey{options.seed, options.experiment, path});
                     const JumpRecord rec = ev.draw(rng);
                     samples[path].value = ev.evaluate(rec);
                     samples[path].weight =
                         std::pow(std::abs(ev.sigma_at_point(rec)), criterion.n);
                   });
  bool any = false;
  for (const auto& s : samples) {
    any = any || s.weight != 0.0;
  }
  if (!any) {
    throw std::domain_error("density_criterion_experiment: every weight |sigma(t,x)|^n vanishes");
  }
  return besov::criterion_family(samples, criterion);
}

}  // namespace ambitlab::ambit
