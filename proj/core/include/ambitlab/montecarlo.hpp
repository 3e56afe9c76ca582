#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ambitlab/rng.hpp"

namespace ambitlab::mc {

enum class FitFlag { ok, inconclusive, degenerate };

std::string to_string(FitFlag flag);

/// Result of a log-log regression log y = intercept + slope * log x.
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double ci_halfwidth = 0.0;  // 95%
  std::size_t points_used = 0;
  FitFlag flag = FitFlag::ok;

  bool ok() const { return flag == FitFlag::ok; }
};

/// Weighted least squares on (log x, log y).
///
/// Standard errors of y, when given and all positive, weight each point by
/// (y/stderr)^2. A fit whose ordinates are all below 1e-14 is returned with
/// FitFlag::degenerate instead of failing. Throws std::invalid_argument for
/// fewer than 4 points, non-monotone abscissae or non-positive values.
ScalingFit fit_scaling(std::span<const double> xs, std::span<const double> ys,
                       std::span<const double> stderrs = {});

/// Marks a fit inconclusive when its R^2 falls below `min_r2`.
ScalingFit require_r2(ScalingFit fit, double min_r2);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Neumaier-compensated summation.
class CompensatedSum {
public:
  void add(double x);
  double value() const { return sum_ + correction_; }

private:
  double sum_ = 0.0;
  double correction_ = 0.0;
};

/// Sample mean and its standard error.
Estimate mean_estimate(std::span<const double> values);

/// Unbiased sample variance.
double sample_variance(std::span<const double> values);

/// Variance estimate with the standard error of the sample variance.
Estimate variance_estimate(std::span<const double> values);

/// Skewness with its large-sample standard error sqrt(6/n).
Estimate skewness_estimate(std::span<const double> values);

struct Ensemble {
  std::uint64_t master_seed = 0;
  std::string experiment;
  std::uint64_t config_hash = 0;
  std::vector<double> values;
  std::vector<double> weights;  // empty when unweighted

  std::size_t size() const { return values.size(); }
};

/// Number of workers to use: `requested` if nonzero, otherwise the
/// AMBITLAB_WORKERS environment variable, otherwise 1.
unsigned resolve_workers(unsigned requested);

/// Calls fn(index, worker) for every index in [0, n). Results must be written
/// by index; scheduling is dynamic, so outputs depend only on the index.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i, 0u);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&](unsigned worker) {
    try {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        fn(i, worker);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) {
        error = std::current_exception();
      }
      next.store(n);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) {
    pool.emplace_back(body, w);
  }
  body(0);
  for (auto& t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

/// Runs one scalar-valued path per index with its own Philox stream keyed by
/// (master_seed, experiment, path index).
template <class PathFn>
std::vector<double> run_paths(std::size_t n_paths, unsigned workers, std::uint64_t master_seed,
                              std::uint64_t experiment, PathFn&& path_fn) {
  std::vector<double> out(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i, unsigned) {
    Philox rng(StreamKey{master_seed, experiment, i});
    out[i] = path_fn(rng, i);
  });
  return out;
}

struct CfPoint {
  double xi = 0.0;
  double re = 0.0;
  double im = 0.0;
  double se_re = 0.0;
  double se_im = 0.0;
};

/// Empirical characteristic function mean(exp(i xi X)) on a frequency grid.
std::vector<CfPoint> empirical_cf(std::span<const double> values, std::span<const double> xi_grid);

struct Bandwidth {
  enum class Kind { silverman, fixed };
  Kind kind = Kind::silverman;
  double value = 0.0;
};

struct GriddedDensity {
  double x0 = 0.0;
  double dx = 0.0;
  double bandwidth = 0.0;
  std::vector<double> values;
  bool degenerate = false;

  double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
  /// Trapezoid integral over the grid.
  double integral() const;
};

/// Gaussian-kernel density estimate on a uniform grid (linear binning plus
/// discrete convolution). Needs at least 100 samples; a zero-variance sample
/// is returned flagged degenerate.
GriddedDensity kernel_density(std::span<const double> values, Bandwidth policy = {});

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// `points` values from lo to hi in geometric progression (ordered as given).
std::vector<double> geometric_grid(double lo, double hi, std::size_t points);

/// Student t quantile, used for 95% intervals.
double student_t_quantile(double p, double dof);

}  // namespace ambitlab::mc
