#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "ambitlab/ambit.hpp"
#include "ambitlab/besov.hpp"
#include "ambitlab/levy.hpp"
#include "ambitlab/montecarlo.hpp"
#include "ambitlab/noise.hpp"
#include "ambitlab/rng.hpp"
#include "ambitlab/spde.hpp"

namespace ambitlab::cli {

namespace {

using json = nlohmann::ordered_json;

json num(double v) {
  if (std::isfinite(v)) {
    return v;
  }
  return nullptr;
}

std::vector<double> grid_from(const Config& c, const std::string& section, const std::string& lo,
                              const std::string& hi, const std::string& points) {
  const double a = c.real(section + "." + lo);
  const double b = c.real(section + "." + hi);
  if (!(a < b)) {
    throw std::invalid_argument(section + "." + lo + " must be below " + section + "." + hi);
  }
  return mc::geometric_grid(a, b, static_cast<std::size_t>(c.integer(section + "." + points)));
}

/// Rounds each value to a positive multiple of `step`, dropping duplicates.
std::vector<double> round_to_steps(const std::vector<double>& values, double step) {
  std::vector<double> out;
  for (double v : values) {
    const double k = std::max(1.0, std::round(v / step));
    const double r = k * step;
    if (out.empty() || std::abs(r - out.back()) > 0.5 * step) {
      out.push_back(r);
    }
  }
  return out;
}

void add_fit(ResultTable& t, const std::string& exp, const std::string& name,
             const mc::ScalingFit& fit) {
  t.add(exp, name, std::nan(""), fit.slope, fit.ci_halfwidth);
  t.add(exp, name + "_r2", std::nan(""), fit.r2);
}

void add_series(ResultTable& t, const std::string& exp, const std::string& name,
                const std::vector<double>& xs, const std::vector<double>& ys,
                const std::vector<double>* se = nullptr) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    t.add(exp, name, xs[i], ys[i], se ? (*se)[i] : std::nan(""));
  }
}

besov::CriterionOptions criterion_options(const Config& c) {
  besov::CriterionOptions o;
  o.n = static_cast<int>(c.integer("besov.n"));
  o.h_grid = besov::default_h_grid(static_cast<int>(c.integer("besov.h_points")));
  o.frequencies = c.reals("besov.frequencies");
  o.include_resonant = c.boolean("besov.include_resonant");
  o.holder_order = c.real("besov.holder_order");
  return o;
}

void add_criterion(ExperimentResult& r, const std::string& exp, const besov::CriterionReport& rep) {
  json members = json::array();
  for (const auto& m : rep.members) {
    add_series(r.table, exp, "stat " + m.test_function_id, m.h_values, m.stat_values,
               &m.stat_stderr);
    add_fit(r.table, exp, "slope " + m.test_function_id, m.fitted_exponent);
    json j = to_json(m.fitted_exponent);
    j["test_function"] = m.test_function_id;
    members.push_back(j);
  }
  add_series(r.table, exp, "stat envelope", rep.envelope.h_values, rep.envelope.stat_values,
             &rep.envelope.stat_stderr);
  add_fit(r.table, exp, "slope envelope", rep.envelope.fitted_exponent);
  r.table.add(exp, "density_verdict", std::nan(""), rep.density_verdict ? 1.0 : 0.0);
  r.summary["holder_order"] = rep.holder_order;
  r.summary["envelope"] = to_json(rep.envelope.fitted_exponent);
  r.summary["members"] = members;
  r.summary["verdict"] = rep.density_verdict;
  r.inconclusive = !rep.envelope.fitted_exponent.ok() &&
                   rep.envelope.fitted_exponent.flag == mc::FitFlag::inconclusive;
}

noise::SpectralNoiseModel noise_model(const Config& c) {
  noise::SpectralNoiseModel m;
  m.d = static_cast<int>(c.integer("noise.d"));
  m.kind = noise::parse_noise_kind(c.text("noise.kind"));
  m.beta = c.real("noise.beta");
  m.ell = c.real("noise.ell");
  m.cutoff = c.real("noise.cutoff");
  m.validate();
  return m;
}

spde::SpdeProblem spde_problem(const Config& c) {
  spde::SpdeProblem p;
  p.noise = noise_model(c);
  p.op = parse_operator(c.text("spde.operator"));
  p.grid.d = p.noise.d;
  p.grid.m = static_cast<std::size_t>(c.integer("spde.m"));
  p.grid.lbox = c.real("spde.lbox");
  p.grid.validate();
  p.coeffs.sigma = spde::Coefficient::parse(c.text("spde.sigma"));
  p.coeffs.b = spde::Coefficient::parse(c.text("spde.b"));
  p.t_end = c.real("spde.t_end");
  p.u0 = c.real("spde.u0");
  p.v0 = c.real("spde.v0");
  if (c.is_auto("spde.dt")) {
    const double dx = p.grid.dx();
    const double unit = (p.op == Operator::heat) ? dx * dx : dx;
    p.dt = p.t_end / std::ceil(p.t_end / unit * (1.0 - 1e-12));
  } else {
    p.dt = c.real("spde.dt");
  }
  return p;
}

levy::LevyBasisModel levy_model(const Config& c) {
  levy::LevyBasisModel m;
  m.alpha = c.real("levy.alpha");
  m.c_plus = c.real("levy.c_plus");
  m.c_minus = c.real("levy.c_minus");
  m.lambda = c.real("levy.lambda");
  m.validate();
  return m;
}

ambit::AmbitSpec ambit_spec(const Config& c) {
  ambit::AmbitSpec s;
  s.A = {c.real("ambit.A_c"), c.real("ambit.A_zeta")};
  s.B = {c.real("ambit.B_c"), c.real("ambit.B_zeta")};
  s.g = ambit::Kernel::parse(c.text("ambit.g"));
  s.h = ambit::Kernel::parse(c.text("ambit.h"));
  s.sigma = holder::FieldSpec::parse(c.text("ambit.sigma"));
  s.b = holder::FieldSpec::parse(c.text("ambit.b"));
  s.x0 = c.real("ambit.x0");
  s.delta1 = c.real("ambit.delta1");
  s.delta2 = c.real("ambit.delta2");
  s.validate();
  return s;
}

ambit::Discretization ambit_disc(const Config& c) {
  ambit::Discretization d;
  d.time_cells = static_cast<std::size_t>(c.integer("ambit.time_cells"));
  d.space_cells = static_cast<std::size_t>(c.integer("ambit.space_cells"));
  d.jumps_per_row = c.real("ambit.jumps_per_row");
  return d;
}

std::vector<double> ambit_eps(const Config& c) {
  const double t = c.real("ambit.t");
  const double rows = static_cast<double>(c.integer("ambit.time_cells"));
  const double lo = c.is_auto("ambit.eps_min") ? 2.0 * t / rows : c.real("ambit.eps_min");
  const double hi = c.is_auto("ambit.eps_max") ? std::min(t, 32.0 * t / rows) : c.real("ambit.eps_max");
  if (!(lo < hi)) {
    throw std::invalid_argument("ambit.eps_min must be below ambit.eps_max");
  }
  return mc::geometric_grid(lo, hi, static_cast<std::size_t>(c.integer("ambit.eps_points")));
}

double ambit_beta(const Config& c, double alpha) {
  return c.is_auto("ambit.beta") ? ambit::default_beta(alpha) : c.real("ambit.beta");
}

double ambit_gamma(const Config& c, double alpha) {
  return c.is_auto("ambit.gamma") ? ambit::default_gamma(alpha) : c.real("ambit.gamma");
}

ExperimentResult spde_exponents(const Config& c, const RunContext& ctx) {
  const std::string exp = "spde-exponents";
  ExperimentResult r;
  const auto problem = spde_problem(c);
  const FundamentalSolution op(problem.op, problem.noise.d);
  const auto eps = grid_from(c, "spde", "eps_min", "eps_max", "eps_points");
  ctx.log("variance quadratures on " + std::to_string(eps.size()) + " eps values");
  const auto g = noise::exponent_gamma(problem.noise, op, eps);
  add_series(r.table, exp, "g", g.eps, g.g);
  add_series(r.table, exp, "g_zero", g.eps, g.g_zero);
  add_fit(r.table, exp, "gamma", g.gamma);
  add_fit(r.table, exp, "gamma1", g.gamma1);
  add_fit(r.table, exp, "gamma2", g.gamma2);

  const spde::SpdeSolver solver(problem);
  const std::size_t n_paths = static_cast<std::size_t>(c.integer("run.n_paths"));
  ctx.log("simulating " + std::to_string(n_paths) + " paths, " + std::to_string(solver.steps()) +
          " steps of dt = " + format_number(problem.dt));
  const spde::EnsembleOptions opts{n_paths, ctx.workers, ctx.seed, hash_name(exp)};
  const auto traces = spde::simulate_traces(solver, opts);
  const bool heat = problem.op == Operator::heat;
  const double lag_lo = c.is_auto("spde.lag_min") ? (heat ? 64.0 : 2.0) * problem.dt
                                                  : c.real("spde.lag_min");
  const double lag_hi = c.is_auto("spde.lag_max") ? (heat ? 0.4 * problem.t_end : 16.0 * problem.dt)
                                                  : c.real("spde.lag_max");
  if (!(lag_lo < lag_hi) || lag_hi >= problem.t_end) {
    throw std::invalid_argument("spde.lag_min < spde.lag_max < spde.t_end is required");
  }
  const auto lags = round_to_steps(
      mc::geometric_grid(lag_lo, lag_hi, static_cast<std::size_t>(c.integer("spde.lag_points"))),
      problem.dt);
  if (lags.size() < 4) {
    throw std::invalid_argument("fewer than 4 distinct time lags after rounding to dt");
  }
  const auto pairs = spde::lag_pairs(problem.t_end, lags);
  const auto delta = spde::time_holder_delta(traces, problem.dt, pairs);
  add_series(r.table, exp, "time_increment_msq", delta.lags, delta.mean_sq, &delta.std_error);
  add_fit(r.table, exp, "delta", delta.fit);
  const auto gb = spde::gammabar(g.gamma.slope, g.gamma1.slope, g.gamma2.slope, delta.fit.slope);
  r.table.add(exp, "gammabar", std::nan(""), gb.value);
  r.table.add(exp, "verdict", std::nan(""), gb.verdict ? 1.0 : 0.0);

  r.summary["operator"] = to_string(problem.op);
  r.summary["noise"] = problem.noise.describe();
  r.summary["dt"] = problem.dt;
  r.summary["dalang"] = num(solver.dalang());
  r.summary["gamma"] = num(g.gamma.slope);
  r.summary["gamma1"] = num(g.gamma1.slope);
  r.summary["gamma2"] = num(g.gamma2.slope);
  r.summary["delta"] = num(delta.fit.slope);
  r.summary["gammabar"] = num(gb.value);
  r.summary["besov_order_upper"] = num(gb.order_upper);
  r.summary["verdict"] = gb.verdict;
  r.summary["fits"] = {{"gamma", to_json(g.gamma)},
                       {"gamma1", to_json(g.gamma1)},
                       {"gamma2", to_json(g.gamma2)},
                       {"delta", to_json(delta.fit)}};
  r.inconclusive = !g.gamma.ok() || !g.gamma1.ok() || !g.gamma2.ok() || !delta.fit.ok();

  if (c.boolean("spde.approximation")) {
    const double t = problem.t_end;
    const double lo = c.is_auto("spde.approx_eps_min") ? t / 128.0 : c.real("spde.approx_eps_min");
    const double hi = c.is_auto("spde.approx_eps_max") ? t / 4.0 : c.real("spde.approx_eps_max");
    if (!(lo < hi) || hi > t) {
      throw std::invalid_argument("spde.approx_eps_min < spde.approx_eps_max <= spde.t_end is required");
    }
    const auto aeps = round_to_steps(
        mc::geometric_grid(lo, hi, static_cast<std::size_t>(c.integer("spde.approx_points"))),
        problem.dt);
    if (aeps.size() < 4) {
      throw std::invalid_argument("fewer than 4 distinct approximation eps after rounding to dt");
    }
    ctx.log("approximation consistency on " + std::to_string(aeps.size()) + " eps values");
    std::vector<std::vector<double>> sq(aeps.size(), std::vector<double>(n_paths));
    const std::uint64_t id = hash_name(exp + "/approximation");
    mc::parallel_for(n_paths, ctx.workers, [&](std::size_t path, unsigned) {
      const auto a = solver.approximate(StreamKey{ctx.seed, id, path}, t, aeps);
      for (std::size_t l = 0; l < aeps.size(); ++l) {
        sq[l][path] = (a[l].u - a[l].u_eps) * (a[l].u - a[l].u_eps);
      }
    });
    std::vector<double> m, se;
    for (const auto& v : sq) {
      const auto e = mc::mean_estimate(v);
      m.push_back(e.value);
      se.push_back(e.std_error);
    }
    const auto fit = mc::require_r2(mc::fit_scaling(aeps, m, se), 0.9);
    const double target = 0.85 * (delta.fit.slope + std::min(g.gamma1.slope, g.gamma2.slope));
    const bool pass = fit.ok() && fit.slope >= target;
    add_series(r.table, exp, "approx_msq", aeps, m, &se);
    add_fit(r.table, exp, "approx_rate", fit);
    r.table.add(exp, "approx_target", std::nan(""), target);
    r.summary["approximation"] = {{"fit", to_json(fit)}, {"target", num(target)}, {"pass", pass}};
    r.inconclusive = r.inconclusive || !fit.ok();
  }
  return r;
}

ExperimentResult spde_density(const Config& c, const RunContext& ctx) {
  const std::string exp = "spde-density";
  ExperimentResult r;
  const auto problem = spde_problem(c);
  const spde::SpdeSolver solver(problem);
  const std::size_t n_paths = static_cast<std::size_t>(c.integer("run.n_paths"));
  ctx.log("simulating " + std::to_string(n_paths) + " paths to t = " + format_number(problem.t_end));
  const auto traces = spde::simulate_traces(solver, {n_paths, ctx.workers, ctx.seed, hash_name(exp)});
  std::vector<double> values;
  values.reserve(traces.size());
  for (const auto& tr : traces) {
    values.push_back(tr.back());
  }
  const auto report =
      spde::density_criterion_experiment(values, problem.coeffs.sigma, criterion_options(c));
  add_criterion(r, exp, report);
  r.summary["sigma"] = problem.coeffs.sigma.describe();
  return r;
}

ExperimentResult levy_check(const Config& c, const RunContext& ctx) {
  const std::string exp = "levy-check";
  ExperimentResult r;
  const auto model = levy_model(c);
  const auto constants = levy::assumption_constants(model);
  r.table.add(exp, "C_bar", std::nan(""), constants.C_bar);
  r.table.add(exp, "c_lower", std::nan(""), constants.c_lower);
  r.table.add(exp, "c_upper", std::nan(""), constants.c_upper);
  r.table.add(exp, "r", std::nan(""), constants.r);
  r.table.add(exp, "assumption_max_violation", std::nan(""), constants.max_violation);
  r.summary["alpha"] = model.alpha;
  r.summary["constants"] = {{"C_bar", constants.C_bar},   {"c_lower", constants.c_lower},
                            {"c_upper", constants.c_upper}, {"r", constants.r},
                            {"max_violation", constants.max_violation},
                            {"verified", constants.verified}};
  bool verdict = constants.verified;

  std::vector<double> gammas;
  if (c.is_auto("levy.gammas")) {
    if (model.alpha + 0.2 < 2.0) {
      gammas.push_back(model.alpha + 0.2);
    }
    gammas.push_back(2.0);
  } else {
    gammas = c.reals("levy.gammas");
  }
  const auto a_grid = grid_from(c, "levy", "a_min", "a_max", "a_points");
  json moments = json::array();
  std::size_t total_violations = 0;
  for (double gamma : gammas) {
    ctx.log("moment lemma at gamma = " + format_number(gamma));
    const auto rep = levy::moment_lemma_check(model, gamma, a_grid);
    const std::string tag = "gamma=" + format_number(gamma);
    for (const auto& row : rep.rows) {
      r.table.add(exp, "moment_integral " + tag, row.a, row.integral);
      r.table.add(exp, "moment_bound " + tag, row.a, row.bound);
    }
    r.table.add(exp, "C_gamma_alpha " + tag, std::nan(""), rep.C_gamma_alpha);
    r.table.add(exp, "violations " + tag, std::nan(""), static_cast<double>(rep.violations));
    moments.push_back({{"gamma", gamma},
                       {"C_gamma_alpha", rep.C_gamma_alpha},
                       {"C_bar", rep.C_bar},
                       {"max_violation", rep.max_violation},
                       {"violations", rep.violations}});
    total_violations += rep.violations;
  }
  r.summary["moment_lemma"] = moments;
  r.summary["violations"] = total_violations;
  verdict = verdict && total_violations == 0;

  const double hw = c.real("levy.slab_halfwidth");
  const auto region = levy::Region::rectangle(0.0, c.real("levy.slab_t"), -hw, hw);
  const levy::Integrand one = [](double, double) { return 1.0; };
  const auto xi = grid_from(c, "levy", "xi_min", "xi_max", "xi_points");
  const auto ce = levy::characteristic_exponent(model, region, one, xi);
  add_series(r.table, exp, "re_psi", ce.xi, ce.re_psi);
  add_fit(r.table, exp, "re_psi_exponent", ce.fit);
  const double psi1 = levy::re_psi(model, region, one, 1.0);
  r.table.add(exp, "re_psi_at_1", 1.0, psi1);
  r.summary["re_psi"] = {{"fit", to_json(ce.fit)},   {"scale", ce.scale},
                         {"c_lower", ce.c_lower},    {"c_upper", ce.c_upper},
                         {"at_1", psi1},             {"sandwich_ok", ce.sandwich_ok}};
  verdict = verdict && ce.sandwich_ok;
  r.inconclusive = !ce.fit.ok();

  if (c.boolean("levy.sampling")) {
    levy::SamplingOptions so;
    so.variance_target = c.real("levy.variance_target");
    const levy::IntegralSampler sampler(model, region, one, so);
    const std::size_t n = static_cast<std::size_t>(c.integer("run.n_paths"));
    ctx.log("sampling " + std::to_string(n) + " slab integrals, " +
            format_number(sampler.expected_jumps()) + " expected jumps each");
    const auto values = mc::run_paths(n, ctx.workers, ctx.seed, hash_name(exp),
                                      [&](Philox& rng, std::size_t) { return sampler.sample(rng); });
    const auto cf_xi = c.reals("levy.cf_xi");
    const auto cf = mc::empirical_cf(values, cf_xi);
    double worst = 0.0;
    for (const auto& p : cf) {
      const double oracle = std::exp(-levy::re_psi(model, region, one, p.xi));
      double z = 0.0;
      if (model.symmetric()) {
        z = std::max(std::abs(p.re - oracle) / p.se_re, std::abs(p.im) / p.se_im);
      } else {
        z = std::abs(std::hypot(p.re, p.im) - oracle) / std::hypot(p.se_re, p.se_im);
      }
      worst = std::max(worst, z);
      r.table.add(exp, "ecf_re", p.xi, p.re, p.se_re);
      r.table.add(exp, "ecf_im", p.xi, p.im, p.se_im);
      r.table.add(exp, "cf_oracle", p.xi, oracle);
    }
    r.summary["sampling"] = {{"draws", n},
                             {"tau", sampler.tau()},
                             {"expected_jumps", sampler.expected_jumps()},
                             {"max_z", worst},
                             {"pass", worst <= 5.0}};
    verdict = verdict && worst <= 5.0;
  }
  r.summary["verdict"] = verdict;
  return r;
}

ExperimentResult ambit_exponents(const Config& c, const RunContext& ctx) {
  const std::string exp = "ambit-exponents";
  ExperimentResult r;
  const auto model = levy_model(c);
  const auto spec = ambit_spec(c);
  const auto eps = ambit_eps(c);
  const double beta = ambit_beta(c, model.alpha);
  const double gamma = ambit_gamma(c, model.alpha);
  ctx.log("exponent quadratures for " + spec.describe());
  const auto b = ambit::exponent_conditions(spec, model, c.real("ambit.t"), c.real("ambit.x"), eps,
                                            beta, gamma);
  add_series(r.table, exp, "lower", b.eps, b.lower);
  add_series(r.table, exp, "plain", b.eps, b.plain);
  add_series(r.table, exp, "time_holder", b.eps, b.time_holder);
  add_series(r.table, exp, "space_holder", b.eps, b.space_holder);
  if (spec.has_drift()) {
    add_series(r.table, exp, "drift_time", b.eps, b.drift_time);
    add_series(r.table, exp, "drift_space", b.eps, b.drift_space);
  }
  const std::vector<std::pair<std::string, const mc::ScalingFit*>> fits{
      {"gamma0", &b.gamma0}, {"gamma1_bar", &b.gamma1_bar}, {"gamma1", &b.gamma1},
      {"gamma2", &b.gamma2}, {"gamma3", &b.gamma3},         {"gamma4", &b.gamma4}};
  json jf;
  for (const auto& [name, fit] : fits) {
    add_fit(r.table, exp, name, *fit);
    jf[name] = to_json(*fit);
    r.summary[name] = num(fit->slope);
  }
  r.table.add(exp, "gammabar", std::nan(""), b.gammabar);
  r.table.add(exp, "integrability", std::nan(""), b.integrability);
  r.table.add(exp, "verdict", std::nan(""), b.verdict ? 1.0 : 0.0);
  r.summary["gammabar"] = num(b.gammabar);
  r.summary["ratio"] = num(b.gammabar / b.gamma0.slope);
  r.summary["threshold"] = 1.0 / model.alpha;
  r.summary["alpha"] = b.alpha;
  r.summary["beta"] = b.beta;
  r.summary["beta_h"] = b.beta_h;
  r.summary["gamma"] = b.gamma;
  r.summary["c_tilde"] = b.c_tilde;
  r.summary["c_lower"] = b.c_lower;
  r.summary["integrability"] = num(b.integrability);
  r.summary["approximation_rate"] = num(b.beta * (1.0 / b.alpha + b.gammabar) - 1.0);
  r.summary["verdict"] = b.verdict;
  r.summary["fits"] = jf;
  r.summary["spec"] = spec.describe();
  r.inconclusive = !b.gamma0.ok() || !b.gamma1.ok() || !b.gamma2.ok() ||
                   (spec.has_drift() && (!b.gamma3.ok() || !b.gamma4.ok()));
  return r;
}

ExperimentResult ambit_decay(const Config& c, const RunContext& ctx) {
  const std::string exp = "ambit-decay";
  ExperimentResult r;
  const auto model = levy_model(c);
  const auto spec = ambit_spec(c);
  const double t = c.real("ambit.t");
  const auto disc = ambit_disc(c);
  const double beta = ambit_beta(c, model.alpha);
  const auto eps = ambit_eps(c);
  ambit::EnsembleOptions opts;
  opts.n_paths = static_cast<std::size_t>(c.integer("run.n_paths"));
  opts.workers = ctx.workers;
  opts.seed = ctx.seed;
  opts.experiment = hash_name(exp);
  ctx.log("paired coupling on " + std::to_string(opts.n_paths) + " paths, " +
          std::to_string(disc.time_cells) + "x" + std::to_string(disc.space_cells) + " cells");
  const auto d = ambit::error_decay(spec, model, t, c.real("ambit.x"), beta, eps, opts, disc);
  add_series(r.table, exp, "moment", d.eps, d.moments, &d.std_error);
  add_fit(r.table, exp, "rate", d.fit);
  r.table.add(exp, "target", std::nan(""), d.target_rate);
  r.table.add(exp, "pass", std::nan(""), d.pass ? 1.0 : 0.0);
  r.summary["beta"] = beta;
  r.summary["rate"] = num(d.fit.slope);
  r.summary["fit"] = to_json(d.fit);
  r.summary["gammabar"] = num(d.gammabar);
  r.summary["target"] = num(d.target_rate);
  r.summary["threshold"] = num(d.target_rate - 0.15);
  r.summary["verdict"] = d.pass;
  r.summary["spec"] = spec.describe();
  r.inconclusive = d.fit.flag == mc::FitFlag::inconclusive;
  return r;
}

ExperimentResult ambit_density(const Config& c, const RunContext& ctx) {
  const std::string exp = "ambit-density";
  ExperimentResult r;
  const auto model = levy_model(c);
  const auto spec = ambit_spec(c);
  ambit::EnsembleOptions opts;
  opts.n_paths = static_cast<std::size_t>(c.integer("run.n_paths"));
  opts.workers = ctx.workers;
  opts.seed = ctx.seed;
  opts.experiment = hash_name(exp);
  ctx.log("density criterion on " + std::to_string(opts.n_paths) + " paths");
  const auto report = ambit::density_criterion_experiment(
      spec, model, c.real("ambit.t"), c.real("ambit.x"), criterion_options(c), opts, ambit_disc(c));
  add_criterion(r, exp, report);
  r.summary["spec"] = spec.describe();
  return r;
}

ExperimentResult besov_stat(const Config& c, const RunContext& ctx) {
  const std::string exp = "besov-stat";
  ExperimentResult r;
  const std::string law = c.text("besov.sample");
  const std::size_t n = static_cast<std::size_t>(c.integer("run.n_paths"));
  ctx.log("criterion statistic on " + std::to_string(n) + " " + law + " draws");
  const auto values = mc::run_paths(n, ctx.workers, ctx.seed, hash_name(exp),
                                    [&](Philox& rng, std::size_t) {
                                      if (law == "normal") {
                                        return rng.normal();
                                      }
                                      if (law == "uniform") {
                                        return 2.0 * rng.uniform() - 1.0;
                                      }
                                      if (law == "cauchy") {
                                        return std::tan(std::numbers::pi * (rng.uniform() - 0.5));
                                      }
                                      return 0.0;
                                    });
  auto cf = [&](double k) {
    if (law == "normal") {
      return std::exp(-0.5 * k * k);
    }
    if (law == "uniform") {
      return std::abs(std::sin(k) / k);
    }
    if (law == "cauchy") {
      return std::exp(-std::abs(k));
    }
    return 1.0;
  };
  const auto options = criterion_options(c);
  std::vector<besov::WeightedSample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples[i] = {1.0, values[i]};
  }
  // Direct oracle: |E Delta_h^n exp(ikX)| = |cf(k)| |2 sin(kh/2)|^n.
  double worst = 0.0;
  std::vector<double> re(n), im(n);
  for (double k : options.frequencies) {
    for (double h : options.h_grid) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = besov::exp_difference(k, values[i], h, options.n);
        re[i] = v.real();
        im[i] = v.imag();
      }
      const auto mre = mc::mean_estimate(re);
      const auto mim = mc::mean_estimate(im);
      const double est = std::hypot(mre.value, mim.value);
      const double se = std::hypot(mre.std_error, mim.std_error);
      const double oracle = cf(k) * std::pow(std::abs(2.0 * std::sin(0.5 * k * h)), options.n);
      const std::string tag = "k=" + format_number(k);
      r.table.add(exp, "abs_mean_difference " + tag, h, est, se);
      r.table.add(exp, "oracle " + tag, h, oracle);
      if (se > 0.0) {
        worst = std::max(worst, std::abs(est - oracle) / se);
      } else if (std::abs(est - oracle) > 1e-12) {
        worst = std::numeric_limits<double>::infinity();
      }
    }
  }
  r.table.add(exp, "max_z", std::nan(""), worst);
  const auto report = besov::criterion_family(samples, options);
  add_criterion(r, exp, report);
  r.summary["sample"] = law;
  r.summary["oracle_max_z"] = num(worst);
  r.summary["oracle_pass"] = worst <= 5.0;
  return r;
}

}  // namespace

ExperimentResult run_experiment(const Config& config, const RunContext& context) {
  const std::string name = config.text("run.experiment");
  if (name == "spde-exponents") {
    return spde_exponents(config, context);
  }
  if (name == "spde-density") {
    return spde_density(config, context);
  }
  if (name == "levy-check") {
    return levy_check(config, context);
  }
  if (name == "ambit-exponents") {
    return ambit_exponents(config, context);
  }
  if (name == "ambit-decay") {
    return ambit_decay(config, context);
  }
  if (name == "ambit-density") {
    return ambit_density(config, context);
  }
  if (name == "besov-stat") {
    return besov_stat(config, context);
  }
  throw ConfigError("run.experiment is required (one of spde-exponents, spde-density, levy-check, "
                    "ambit-exponents, ambit-decay, ambit-density, besov-stat)");
}

int run_command(const RunRequest& request) {
  namespace fs = std::filesystem;
  Config config;
  std::string outdir;
  try {
    if (request.config_path) {
      config = Config::load(*request.config_path);
    }
    if (request.experiment) {
      config.set("run.experiment", *request.experiment, "--experiment");
    }
    for (const auto& o : request.overrides) {
      config.apply_override(o);
    }
    if (request.seed) {
      config.set("run.seed", std::to_string(*request.seed), "--seed");
    }
    if (request.workers) {
      config.set("run.workers", std::to_string(*request.workers), "--workers");
    }
    if (request.outdir) {
      config.set("run.outdir", *request.outdir, "--outdir");
    }
    if (config.text("run.experiment").empty()) {
      throw ConfigError("no experiment given: set run.experiment in the config or pass --experiment");
    }
    outdir = config.text("run.outdir");
    if (!fs::is_directory(outdir)) {
      throw ConfigError("output directory '" + outdir + "' does not exist");
    }
  } catch (const std::exception& e) {
    std::cerr << "ambitlab: " << e.what() << "\n";
    return 1;
  }

  const fs::path dir(outdir);
  auto file_sink = std::make_shared<spdlog::sinks::basic_file_sink_mt>((dir / "run.log").string(), true);
  auto err_sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
  spdlog::logger logger("ambitlab", {file_sink, err_sink});
  logger.set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");
  logger.flush_on(spdlog::level::info);

  const std::string experiment = config.text("run.experiment");
  const std::uint64_t seed = config.unsigned_integer("run.seed");
  const unsigned workers = mc::resolve_workers(static_cast<unsigned>(config.integer("run.workers")));
  RunContext ctx;
  ctx.seed = seed;
  ctx.workers = workers;
  ctx.log = [&logger](const std::string& msg) { logger.info(msg); };
  logger.info("experiment {} seed {} workers {} config hash {}", experiment, seed, workers,
              config.hash());
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  try {
    result = run_experiment(config, ctx);
  } catch (const std::exception& e) {
    logger.error("{}", e.what());
    return 1;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json summary;
  summary["experiment"] = experiment;
  summary["config_hash"] = config.hash();
  summary["seed"] = seed;
  summary["n_paths"] = config.integer("run.n_paths");
  summary["status"] = result.inconclusive ? "inconclusive" : "ok";
  for (auto& [key, value] : result.summary.items()) {
    summary[key] = value;
  }
  json cfg;
  std::istringstream lines(config.canonical());
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  summary["config"] = cfg;

  try {
    std::ofstream csv(dir / "results.csv", std::ios::binary);
    result.table.write_csv(csv);
    std::ofstream js(dir / "summary.json", std::ios::binary);
    js << summary.dump(2) << "\n";
    if (!csv || !js) {
      throw std::runtime_error("could not write results into '" + outdir + "'");
    }
  } catch (const std::exception& e) {
    logger.error("{}", e.what());
    return 1;
  }
  logger.info("finished in {:.2f} s, status {}", seconds,
              result.inconclusive ? "inconclusive" : "ok");
  return result.inconclusive ? 2 : 0;
}

}  // namespace ambitlab::cli
