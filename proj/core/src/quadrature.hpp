#pragma once

#include <functional>

namespace ambitlab::detail {

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (61 points) on a finite interval.
double integrate_gk(const Integrand& f, double a, double b, double rel_tol = 1e-12,
                    unsigned max_depth = 15);

/// Tanh-sinh on a finite interval; tolerates integrable endpoint singularities.
double integrate_ts(const Integrand& f, double a, double b, double rel_tol = 1e-12);

/// Exp-sinh on [a, infinity).
double integrate_tail(const Integrand& f, double a, double rel_tol = 1e-12);

/// int_0^inf f(t) cos(omega t) dt and int_0^inf f(t) sin(omega t) dt for slowly
/// decaying f, at relative tolerance about 1e-12.
double integrate_fourier_cos(const Integrand& f, double omega);
double integrate_fourier_sin(const Integrand& f, double omega);

}  // namespace ambitlab::detail
