#include "ambitlab/holder_field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include "fft.hpp"

namespace ambitlab::holder {

FbmSampler::FbmSampler(double hurst, std::size_t n, double step)
    : hurst_(hurst), n_(n), step_(step) {
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw std::invalid_argument("FbmSampler: Hurst index must lie in (0, 1)");
  }
  if (n < 1 || !(step > 0.0)) {
    throw std::invalid_argument("FbmSampler: need n >= 1 and step > 0");
  }
  const std::size_t m = 2 * n;
  const double h2 = 2.0 * hurst;
  auto r = [&](double k) {
    return 0.5 * std::pow(step, h2) *
           (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(std::abs(k - 1.0), h2));
  };
  std::vector<std::complex<double>> c(m);
  for (std::size_t k = 0; k <= n; ++k) {
    c[k] = r(static_cast<double>(k));
  }
  for (std::size_t k = n + 1; k < m; ++k) {
    c[k] = c[m - k];
  }
  plan_ = detail::shared_plan({static_cast<int>(m)});
  plan_->forward(c.data());
  amplitude_.resize(m);
  double top = 0.0;
  for (const auto& v : c) {
    top = std::max(top, v.real());
  }
  for (std::size_t k = 0; k < m; ++k) {
    double lam = c[k].real();
    if (lam < 0.0) {
      if (lam < -1e-10 * top) {
        throw std::runtime_error("FbmSampler: circulant embedding is not nonnegative definite");
      }
      lam = 0.0;
    }
    amplitude_[k] = std::sqrt(lam / static_cast<double>(m));
  }
}

std::vector<double> FbmSampler::sample(Philox& rng) const {
  const std::size_t m = amplitude_.size();
  std::vector<std::complex<double>> w(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = rng.normal();
    const double b = rng.normal();
    w[k] = amplitude_[k] * std::complex<double>(a, b);
  }
  plan_->forward(w.data());
  std::vector<double> path(n_ + 1);
  path[0] = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    path[k + 1] = path[k] + w[k].real();
  }
  return path;
}

void FieldSpec::validate() const {
  if (!std::isfinite(level) || !std::isfinite(scale)) {
    throw std::invalid_argument("FieldSpec: level and scale must be finite");
  }
  if (kind != Kind::constant && !(h_time > 0.0 && h_time < 1.0 && h_space > 0.0 && h_space < 1.0)) {
    throw std::invalid_argument("FieldSpec: Hurst indices must lie in (0, 1)");
  }
}

std::string FieldSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::constant:
      os << "const:" << level;
      break;
    case Kind::additive:
      os << "fbm:" << level << ',' << scale << ',' << h_time << ',' << h_space;
      break;
    case Kind::exponential:
      os << "expfbm:" << level << ',' << scale << ',' << h_time << ',' << h_space;
      break;
  }
  return os.str();
}

FieldSpec FieldSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("FieldSpec: expected name:values, got '" + text + "'");
  }
  const std::string name = text.substr(0, colon);
  std::vector<double> values;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw std::invalid_argument("FieldSpec: bad number '" + item + "' in '" + text + "'");
    }
    values.push_back(v);
  }
  FieldSpec spec;
  if (name == "const" && values.size() == 1) {
    spec = constant(values[0]);
  } else if ((name == "fbm" || name == "expfbm") && values.size() == 4) {
    spec.kind = (name == "fbm") ? Kind::additive : Kind::exponential;
    spec.level = values[0];
    spec.scale = values[1];
    spec.h_time = values[2];
    spec.h_space = values[3];
  } else {
    throw std::invalid_argument("FieldSpec: unknown field '" + text +
                                "' (const:a, fbm:l,s,h1,h2, expfbm:l,s,h1,h2)");
  }
  spec.validate();
  return spec;
}

FieldPath::FieldPath(FieldSpec spec, std::vector<double> time_part, std::vector<double> space_part)
    : spec_(spec), time_(std::move(time_part)), space_(std::move(space_part)) {}

double FieldPath::at(std::size_t a, std::size_t b) const {
  if (spec_.is_constant()) {
    return spec_.level;
  }
  if (spec_.kind == FieldSpec::Kind::additive) {
    return spec_.level + (time_[a] + space_[b]);
  }
  return spec_.level * (time_[a] * space_[b]);
}

FieldSampler::FieldSampler(FieldSpec spec, FieldGrid grid) : spec_(spec), grid_(grid) {
  spec_.validate();
  if (grid.ns < 1 || grid.ny < 1 || !(grid.ds > 0.0) || !(grid.dy > 0.0)) {
    throw std::invalid_argument("FieldSampler: grid needs ns, ny >= 1 and positive steps");
  }
  if (!spec_.is_constant()) {
    time_ = std::make_unique<FbmSampler>(spec_.h_time, 2 * grid.ns, 0.5 * grid.ds);
    space_ = std::make_unique<FbmSampler>(spec_.h_space, 2 * grid.ny, 0.5 * grid.dy);
  }
}

FieldPath FieldSampler::sample(Philox& rng) const {
  if (spec_.is_constant()) {
    return FieldPath(spec_, {}, {});
  }
  auto t = time_->sample(rng);
  auto y = space_->sample(rng);
  for (auto* v : {&t, &y}) {
    for (double& e : *v) {
      e = (spec_.kind == FieldSpec::Kind::exponential) ? std::exp(spec_.scale * e)
                                                        : spec_.scale * e;
    }
  }
  return FieldPath(spec_, std::move(t), std::move(y));
}

HolderCheck holder_moment_check(const FieldSpec& spec, const FieldGrid& grid, Direction direction,
                                double p, std::span<const std::size_t> half_steps,
                                std::size_t n_paths, std::uint64_t seed) {
  if (!(p > 0.0)) {
    throw std::invalid_argument("holder_moment_check: moment order must be positive");
  }
  if (half_steps.size() < 4) {
    throw std::invalid_argument("holder_moment_check: need at least four lags");
  }
  const FieldSampler sampler(spec, grid);
  const std::size_t a0 = grid.ns;  // half-step index of the time midpoint
  const std::size_t b0 = grid.ny;
  const std::size_t limit = (direction == Direction::time) ? grid.ns : grid.ny;
  for (std::size_t k : half_steps) {
    if (k == 0 || k > limit) {
      throw std::invalid_argument("holder_moment_check: lag outside the grid");
    }
  }
  std::vector<std::vector<double>> samples(half_steps.size(), std::vector<double>(n_paths));
  mc::parallel_for(n_paths, mc::resolve_workers(0), [&](std::size_t path, unsigned) {
    Philox rng(StreamKey{seed, hash_name("holder-check"), path});
    const FieldPath f = sampler.sample(rng);
    for (std::size_t l = 0; l < half_steps.size(); ++l) {
      const std::size_t k = half_steps[l];
      const double d = (direction == Direction::time) ? f.at(a0 + k, b0) - f.at(a0, b0)
                                                      : f.at(a0, b0 + k) - f.at(a0, b0);
      samples[l][path] = std::pow(std::abs(d), p);
    }
  });
  HolderCheck out;
  const double half = 0.5 * ((direction == Direction::time) ? grid.ds : grid.dy);
  for (std::size_t l = 0; l < half_steps.size(); ++l) {
    const auto est = mc::mean_estimate(samples[l]);
    out.lags.push_back(half * static_cast<double>(half_steps[l]));
    out.moments.push_back(est.value);
    out.std_error.push_back(est.std_error);
  }
  out.fit = mc::fit_scaling(out.lags, out.moments, out.std_error);
  out.exponent = out.fit.slope / p;
  return out;
}

}  // namespace ambitlab::holder
