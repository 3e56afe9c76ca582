#include "quadrature.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <vector>
#include <string>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace ambitlab::detail {

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string(what) + ": quadrature did not converge");
  }
  return v;
}

}  // namespace

double integrate_gk(const Integrand& f, double a, double b, double rel_tol, unsigned max_depth) {
  if (a == b) {
    return 0.0;
  }
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, max_depth, rel_tol, &err);
  return checked(v, "gauss_kronrod");
}

double integrate_ts(const Integrand& f, double a, double b, double rel_tol) {
  if (a == b) {
    return 0.0;
  }
  // one integrator per nesting level, since an integrator extends its tables lazily
  static thread_local std::vector<std::unique_ptr<boost::math::quadrature::tanh_sinh<double>>> pool;
  static thread_local std::size_t depth = 0;
  if (pool.size() <= depth) {
    pool.push_back(std::make_unique<boost::math::quadrature::tanh_sinh<double>>());
  }
  auto& ts = *pool[depth];
  ++depth;
  struct Guard {
    std::size_t& d;
    ~Guard() { --d; }
  } guard{depth};
  return checked(ts.integrate(f, a, b, rel_tol), "tanh_sinh");
}

double integrate_tail(const Integrand& f, double a, double rel_tol) {
  static thread_local std::vector<std::unique_ptr<boost::math::quadrature::exp_sinh<double>>> pool;
  static thread_local std::size_t depth = 0;
  if (pool.size() <= depth) {
    pool.push_back(std::make_unique<boost::math::quadrature::exp_sinh<double>>());
  }
  auto& es = *pool[depth];
  ++depth;
  struct Guard {
    std::size_t& d;
    ~Guard() { --d; }
  } guard{depth};
  return checked(es.integrate([&](double t) { return f(t); }, a,
                              std::numeric_limits<double>::infinity(), rel_tol),
                 "exp_sinh");
}

double integrate_fourier_cos(const Integrand& f, double omega) {
  static thread_local boost::math::quadrature::ooura_fourier_cos<double> oc(1e-12);
  return checked(oc.integrate(f, omega).first, "ooura_fourier_cos");
}

double integrate_fourier_sin(const Integrand& f, double omega) {
  static thread_local boost::math::quadrature::ooura_fourier_sin<double> os(1e-12);
  return checked(os.integrate(f, omega).first, "ooura_fourier_sin");
}

}  // namespace ambitlab::detail
