#include "ambitlab/spde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ambitlab::spde {

using cplx = std::complex<double>;

double Coefficient::operator()(double x) const {
  switch (kind) {
    case Kind::constant:
      return a;
    case Kind::linear:
      return a * x;
    case Kind::affine:
      return a + b * x;
    case Kind::sine:
      return a * std::sin(b * x);
  }
  return 0.0;
}

double Coefficient::lipschitz() const {
  switch (kind) {
    case Kind::constant:
      return 0.0;
    case Kind::linear:
      return std::abs(a);
    case Kind::affine:
      return std::abs(b);
    case Kind::sine:
      return std::abs(a * b);
  }
  return 0.0;
}

bool Coefficient::is_constant() const {
  return kind == Kind::constant || (kind == Kind::affine && b == 0.0) ||
         ((kind == Kind::linear || kind == Kind::sine) && a == 0.0);
}

std::string Coefficient::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::constant:
      os << "const:" << a;
      break;
    case Kind::linear:
      os << "linear:" << a;
      break;
    case Kind::affine:
      os << "affine:" << a << "," << b;
      break;
    case Kind::sine:
      os << "sine:" << a << "," << b;
      break;
  }
  return os.str();
}

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& spec) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("coefficient '" + spec + "': bad number '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(v)) {
      throw std::invalid_argument("coefficient '" + spec + "': bad number '" + item + "'");
    }
    out.push_back(v);
    if (comma == std::string::npos) {
      break;
    }
    pos = comma + 1;
  }
  return out;
}

}  // namespace

Coefficient Coefficient::parse(const std::string& spec) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("coefficient '" + spec + "': expected family:parameters");
  }
  const std::string family = spec.substr(0, colon);
  const auto args = parse_numbers(spec.substr(colon + 1), spec);
  auto expect = [&](std::size_t n) {
    if (args.size() != n) {
      throw std::invalid_argument("coefficient '" + spec + "': expected " + std::to_string(n) +
                                  " parameter(s)");
    }
  };
  if (family == "const") {
    expect(1);
    return {Kind::constant, args[0], 0.0};
  }
  if (family == "linear") {
    expect(1);
    return {Kind::linear, args[0], 0.0};
  }
  if (family == "affine") {
    expect(2);
    return {Kind::affine, args[0], args[1]};
  }
  if (family == "sine") {
    expect(2);
    return {Kind::sine, args[0], args[1]};
  }
  throw std::invalid_argument("coefficient '" + spec + "': unknown family '" + family + "'");
}

/// Per-mode propagation, noise and drift factors for one step.
struct SpdeSolver::Modes {
  std::vector<double> rho;
  // heat
  std::vector<double> decay, noise_gain, drift;
  // wave
  std::vector<double> cos_, sin_over_rho, minus_rho_sin, l11, l21, l22, drift_u, drift_v;
};

SpdeSolver::SpdeSolver(SpdeProblem problem)
    : problem_(std::move(problem)), op_(problem_.op, problem_.grid.d) {
  const auto& p = problem_;
  p.noise.validate();
  p.grid.validate();
  if (p.noise.d != p.grid.d) {
    throw std::invalid_argument("spde: noise and grid dimensions differ");
  }
  if (!(p.t_end > 0.0) || !(p.dt > 0.0)) {
    throw std::invalid_argument("spde: t_end and dt must be positive");
  }
  if (!std::isfinite(p.u0) || !std::isfinite(p.v0)) {
    throw std::invalid_argument("spde: initial values must be finite");
  }
  const double dx = p.grid.dx();
  if (p.op == Operator::heat && p.dt > dx * dx * (1.0 + 1e-12)) {
    throw std::invalid_argument("spde: CFL violation, heat needs dt <= dx^2");
  }
  if (p.op == Operator::wave && p.dt > dx * (1.0 + 1e-12)) {
    throw std::invalid_argument("spde: CFL violation, wave needs dt <= dx");
  }
  const double ratio = p.t_end / p.dt;
  steps_ = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps_)) > 1e-6 * std::max(1.0, ratio) || steps_ == 0) {
    throw std::invalid_argument("spde: t_end must be a whole number of steps");
  }
  dalang_ = noise::dalang_integral(p.noise, op_, p.t_end);

  sampler_ = std::make_unique<noise::NoiseSampler>(p.noise, p.grid);
  modes_ = std::make_unique<Modes>();
  auto& md = *modes_;
  md.rho = sampler_->frequencies();
  const std::size_t n = md.rho.size();
  const double h = p.dt;
  if (p.op == Operator::heat) {
    md.decay.resize(n);
    md.noise_gain.resize(n);
    md.drift.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double r = md.rho[k];
      md.decay[k] = op_.fourier(h, r);
      md.noise_gain[k] = std::sqrt(op_.squared_time_integral(0.0, h, r) / h);
      md.drift[k] = op_.time_integral(h, r);
    }
  } else {
    for (auto* v : {&md.cos_, &md.sin_over_rho, &md.minus_rho_sin, &md.l11, &md.l21, &md.l22,
                    &md.drift_u, &md.drift_v}) {
      v->resize(n);
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double r = md.rho[k];
      const double x = r * h;
      md.cos_[k] = std::cos(x);
      md.sin_over_rho[k] = op_.fourier(h, r);
      md.minus_rho_sin[k] = -r * std::sin(x);
      // (1/h) int_0^h [S^2, S C; S C, C^2] with S = sin(r s)/r, C = cos(r s)
      double c11 = op_.squared_time_integral(0.0, h, r);
      double c12, c22;
      if (x < 1e-4) {
        c12 = 0.5 * h * h * (1.0 - x * x / 3.0);
        c22 = h * (1.0 - x * x / 3.0);
      } else {
        const double s = std::sin(x);
        c12 = s * s / (2.0 * r * r);
        c22 = 0.5 * h + std::sin(2.0 * x) / (4.0 * r);
      }
      c11 /= h;
      c12 /= h;
      c22 /= h;
      md.l11[k] = std::sqrt(c11);
      md.l21[k] = c12 / md.l11[k];
      md.l22[k] = std::sqrt(std::max(0.0, c22 - md.l21[k] * md.l21[k]));
      md.drift_u[k] = op_.time_integral(h, r);
      md.drift_v[k] = op_.fourier(h, r);
    }
  }
}

SpdeSolver::~SpdeSolver() = default;
SpdeSolver::SpdeSolver(SpdeSolver&&) noexcept = default;

namespace {

double value_at_origin(const std::vector<cplx>& uhat) {
  double s = 0.0;
  for (const auto& z : uhat) {
    s += z.real();
  }
  return s / static_cast<double>(uhat.size());
}

struct NullObserver {
  void on_state(std::size_t, const std::vector<cplx>&, const std::vector<cplx>&, double) {}
  void on_noise(std::size_t, const std::vector<cplx>&, const std::vector<cplx>&) {}
};

}  // namespace

template <class Observer>
void SpdeSolver::run(const StreamKey& key, std::size_t last_step, Observer&& observer) const {
  const auto& p = problem_;
  const auto& md = *modes_;
  const std::size_t n = md.rho.size();
  const double nn = static_cast<double>(n);
  const bool wave = p.op == Operator::wave;
  const bool additive = p.coeffs.sigma.is_constant();
  const bool const_drift = p.coeffs.b.is_constant();
  const double sigma0 = p.coeffs.sigma(0.0);
  const double b0 = p.coeffs.b(0.0);

  Philox rng(key);
  std::vector<cplx> u(n, cplx{}), v(wave ? n : 0, cplx{});
  u[0] = p.u0 * nn;
  if (wave) {
    v[0] = p.v0 * nn;
  }
  std::vector<cplx> w1, w2, phys, f1, f2, drift;
  std::vector<double> uphys;

  double u_origin = p.u0;
  observer.on_state(0, u, v, u_origin);
  for (std::size_t step = 0; step < last_step; ++step) {
    sampler_->sample_fourier(p.dt, rng, w1);
    if (wave) {
      sampler_->sample_fourier(p.dt, rng, w2);
    }
    observer.on_noise(step, w1, w2);

    const cplx* n1 = w1.data();
    const cplx* n2 = wave ? w2.data() : nullptr;
    const cplx* bhat = nullptr;
    double sigma_scale = sigma0;
    if (!additive || !const_drift) {
      phys = u;
      sampler_->to_physical(phys);
      uphys.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        uphys[i] = phys[i].real();
        if (!std::isfinite(uphys[i])) {
          throw PathFailure("spde: non-finite state at step " + std::to_string(step), step);
        }
      }
      if (!additive) {
        auto multiply = [&](const std::vector<cplx>& w, std::vector<cplx>& out) {
          out = w;
          sampler_->to_physical(out);
          for (std::size_t i = 0; i < n; ++i) {
            out[i] = p.coeffs.sigma(uphys[i]) * out[i].real();
          }
          sampler_->to_fourier(out);
        };
        multiply(w1, f1);
        n1 = f1.data();
        if (wave) {
          multiply(w2, f2);
          n2 = f2.data();
        }
        sigma_scale = 1.0;
      }
      if (!const_drift) {
        drift.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          drift[i] = p.coeffs.b(uphys[i]);
        }
        sampler_->to_fourier(drift);
        bhat = drift.data();
      }
    }
    auto drift_at = [&](std::size_t k) -> cplx {
      if (bhat != nullptr) {
        return bhat[k];
      }
      return k == 0 ? cplx{b0 * nn, 0.0} : cplx{};
    };

    if (!wave) {
      for (std::size_t k = 0; k < n; ++k) {
        u[k] = md.decay[k] * u[k] + md.noise_gain[k] * sigma_scale * n1[k] + md.drift[k] * drift_at(k);
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        const cplx uk = u[k];
        const cplx vk = v[k];
        const cplx a = sigma_scale * n1[k];
        const cplx c = sigma_scale * n2[k];
        const cplx bk = drift_at(k);
        u[k] = md.cos_[k] * uk + md.sin_over_rho[k] * vk + md.l11[k] * a + md.drift_u[k] * bk;
        v[k] = md.minus_rho_sin[k] * uk + md.cos_[k] * vk + md.l21[k] * a + md.l22[k] * c +
               md.drift_v[k] * bk;
      }
    }
    u_origin = value_at_origin(u);
    if (!std::isfinite(u_origin)) {
      throw PathFailure("spde: non-finite state at step " + std::to_string(step + 1), step + 1);
    }
    observer.on_state(step + 1, u, v, u_origin);
  }
}

FieldSolution SpdeSolver::solve(const StreamKey& key, std::span<const double> store_times) const {
  FieldSolution sol;
  sol.grid = problem_.grid;
  sol.dt = problem_.dt;
  sol.key = key;
  sol.trace.reserve(steps_ + 1);
  std::vector<std::size_t> store_steps;
  for (double t : store_times) {
    if (!(t >= 0.0) || t > problem_.t_end * (1.0 + 1e-12)) {
      throw std::invalid_argument("solve: store time outside [0, t_end]");
    }
    store_steps.push_back(static_cast<std::size_t>(std::llround(t / problem_.dt)));
  }
  struct Observer {
    FieldSolution& sol;
    const std::vector<std::size_t>& store;
    const SpdeSolver& self;
    void on_state(std::size_t step, const std::vector<cplx>& u, const std::vector<cplx>&, double u0) {
      sol.trace.push_back(u0);
      if (std::find(store.begin(), store.end(), step) != store.end()) {
        std::vector<cplx> phys = u;
        self.sampler_->to_physical(phys);
        std::vector<double> field(phys.size());
        for (std::size_t i = 0; i < phys.size(); ++i) {
          field[i] = phys[i].real();
        }
        sol.times.push_back(static_cast<double>(step) * sol.dt);
        sol.states.push_back(std::move(field));
      }
    }
    void on_noise(std::size_t, const std::vector<cplx>&, const std::vector<cplx>&) {}
  } obs{sol, store_steps, *this};
  run(key, steps_, obs);
  return sol;
}

std::vector<double> SpdeSolver::trace(const StreamKey& key) const {
  std::vector<double> out;
  out.reserve(steps_ + 1);
  struct Observer {
    std::vector<double>& out;
    void on_state(std::size_t, const std::vector<cplx>&, const std::vector<cplx>&, double u0) {
      out.push_back(u0);
    }
    void on_noise(std::size_t, const std::vector<cplx>&, const std::vector<cplx>&) {}
  } obs{out};
  run(key, steps_, obs);
  return out;
}

std::vector<EpsApproximation> SpdeSolver::approximate(const StreamKey& key, double t,
                                                      std::span<const double> eps) const {
  const auto& p = problem_;
  const auto& md = *modes_;
  const double ratio = t / p.dt;
  const auto t_step = static_cast<std::size_t>(std::llround(ratio));
  if (!(t > 0.0) || t > p.t_end * (1.0 + 1e-12) ||
      std::abs(ratio - static_cast<double>(t_step)) > 1e-6 * std::max(1.0, ratio)) {
    throw std::invalid_argument("approximate_u_eps: t must be a step time in (0, t_end]");
  }
  const bool wave = p.op == Operator::wave;
  struct Aux {
    std::size_t start = 0;
    EpsApproximation out;
    std::vector<cplx> gu, gv;
  };
  std::vector<Aux> aux;
  for (double e : eps) {
    if (!(e > 0.0) || e >= t) {
      throw std::invalid_argument("approximate_u_eps: eps must lie in (0, t)");
    }
    const auto j = static_cast<std::size_t>(std::llround(e / p.dt));
    if (j == 0 || j >= t_step) {
      throw std::invalid_argument("approximate_u_eps: eps must span at least one step and less than t");
    }
    Aux a;
    a.start = t_step - j;
    a.out.eps = static_cast<double>(j) * p.dt;
    aux.push_back(std::move(a));
  }

  struct Observer {
    const SpdeSolver& self;
    const Modes& md;
    bool wave;
    std::size_t t_step;
    std::vector<Aux>& aux;

    void on_state(std::size_t step, const std::vector<cplx>& u, const std::vector<cplx>& v, double u0) {
      const double nn = static_cast<double>(u.size());
      const auto& p = self.problem_;
      for (auto& a : aux) {
        if (step == a.start) {
          const double e = a.out.eps;
          double free = 0.0;
          for (std::size_t k = 0; k < u.size(); ++k) {
            const double r = md.rho[k];
            if (!wave) {
              free += self.op_.fourier(e, r) * u[k].real();
            } else {
              free += std::cos(r * e) * u[k].real() + self.op_.fourier(e, r) * v[k].real();
            }
          }
          a.out.u_prev = u0;
          a.out.U_eps = free / nn + p.coeffs.b(u0) * self.op_.time_integral(e, 0.0);
          a.gu.assign(u.size(), cplx{});
          if (wave) {
            a.gv.assign(u.size(), cplx{});
          }
        }
        if (step == t_step) {
          a.out.u = u0;
          a.out.G = value_at_origin(a.gu);
          a.out.u_eps = a.out.U_eps + p.coeffs.sigma(a.out.u_prev) * a.out.G;
        }
      }
    }

    void on_noise(std::size_t step, const std::vector<cplx>& w1, const std::vector<cplx>& w2) {
      for (auto& a : aux) {
        if (step < a.start) {
          continue;
        }
        if (!wave) {
          for (std::size_t k = 0; k < w1.size(); ++k) {
            a.gu[k] = md.decay[k] * a.gu[k] + md.noise_gain[k] * w1[k];
          }
        } else {
          for (std::size_t k = 0; k < w1.size(); ++k) {
            const cplx gu = a.gu[k];
            const cplx gv = a.gv[k];
            a.gu[k] = md.cos_[k] * gu + md.sin_over_rho[k] * gv + md.l11[k] * w1[k];
            a.gv[k] = md.minus_rho_sin[k] * gu + md.cos_[k] * gv + md.l21[k] * w1[k] + md.l22[k] * w2[k];
          }
        }
      }
    }
  } obs{*this, md, wave, t_step, aux};
  run(key, t_step, obs);

  std::vector<EpsApproximation> out;
  out.reserve(aux.size());
  for (auto& a : aux) {
    out.push_back(a.out);
  }
  return out;
}

FieldSolution solve(const SpdeProblem& problem, const StreamKey& key,
                    std::span<const double> store_times) {
  return SpdeSolver(problem).solve(key, store_times);
}

std::vector<EpsApproximation> approximate_u_eps(const SpdeSolver& solver,
                                                const FieldSolution& solution, double t,
                                                std::span<const double> eps) {
  if (solution.dt != solver.problem().dt) {
    throw std::invalid_argument("approximate_u_eps: solution was produced by a different scheme");
  }
  return solver.approximate(solution.key, t, eps);
}

std::vector<std::vector<double>> simulate_traces(const SpdeSolver& solver,
                                                 const EnsembleOptions& options) {
  std::vector<std::vector<double>> traces(options.n_paths);
  mc::parallel_for(options.n_paths, options.workers, [&](std::size_t i, unsigned) {
    traces[i] = solver.trace(StreamKey{options.seed, options.experiment, i});
  });
  return traces;
}

std::vector<TimePair> lag_pairs(double t_ref, std::span<const double> lags) {
  std::vector<TimePair> out;
  for (double lag : lags) {
    if (!(lag > 0.0) || lag > t_ref) {
      throw std::invalid_argument("lag_pairs: lags must lie in (0, t_ref]");
    }
    out.push_back({t_ref, t_ref - lag});
  }
  return out;
}

DeltaFit time_holder_delta(const std::vector<std::vector<double>>& traces, double dt,
                           std::span<const TimePair> pairs) {
  if (pairs.size() < 4) {
    throw std::invalid_argument("time_holder_delta: need at least 4 lag points");
  }
  if (traces.empty()) {
    throw std::invalid_argument("time_holder_delta: empty ensemble");
  }
  DeltaFit out;
  std::vector<double> sq(traces.size());
  for (const auto& pr : pairs) {
    const auto it = static_cast<std::size_t>(std::llround(pr.t / dt));
    const auto is = static_cast<std::size_t>(std::llround(pr.s / dt));
    for (std::size_t i = 0; i < traces.size(); ++i) {
      if (it >= traces[i].size() || is >= traces[i].size()) {
        throw std::invalid_argument("time_holder_delta: time outside the stored trace");
      }
      const double d = traces[i][it] - traces[i][is];
      sq[i] = d * d;
    }
    const auto est = mc::mean_estimate(sq);
    out.lags.push_back(std::abs(static_cast<double>(it) - static_cast<double>(is)) * dt);
    out.mean_sq.push_back(est.value);
    out.std_error.push_back(est.std_error);
  }
  const bool all_zero = std::all_of(out.mean_sq.begin(), out.mean_sq.end(),
                                    [](double v) { return std::abs(v) < 1e-14; });
  out.fit = mc::require_r2(
      mc::fit_scaling(out.lags, out.mean_sq,
                      all_zero ? std::span<const double>{} : std::span<const double>(out.std_error)),
      0.9);
  return out;
}

GammaBar gammabar(double gamma, double gamma1, double gamma2, double delta) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("gammabar: gamma must be positive");
  }
  GammaBar g;
  g.value = (std::min(gamma1, gamma2) + delta) / gamma;
  g.verdict = g.value > 1.0;
  g.order_upper = std::max(0.0, g.value - 1.0);
  return g;
}

besov::CriterionReport density_criterion_experiment(std::span<const double> values,
                                                    const Coefficient& sigma,
                                                    const besov::CriterionOptions& options) {
  std::vector<besov::WeightedSample> samples;
  samples.reserve(values.size());
  bool any = false;
  for (double x : values) {
    const double w = std::pow(std::abs(sigma(x)), options.n);
    any = any || w != 0.0;
    samples.push_back({w, x});
  }
  if (!any) {
    throw std::domain_error("density_criterion_experiment: degenerate measure, every weight is zero");
  }
  return besov::criterion_family(samples, options);
}

}  // namespace ambitlab::spde
