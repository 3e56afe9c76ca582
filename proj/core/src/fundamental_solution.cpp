#include "ambitlab/fundamental_solution.hpp"

#include <cmath>
#include <stdexcept>

namespace ambitlab {

std::string to_string(Operator op) { return op == Operator::heat ? "heat" : "wave"; }

Operator parse_operator(const std::string& name) {
  if (name == "heat") {
    return Operator::heat;
  }
  if (name == "wave") {
    return Operator::wave;
  }
  throw std::invalid_argument("unknown operator '" + name + "' (expected heat or wave)");
}

FundamentalSolution::FundamentalSolution(Operator op, int d) : op_(op), d_(d) {
  if (d < 1) {
    throw std::invalid_argument("FundamentalSolution: dimension must be positive");
  }
  if (op == Operator::wave && d > 3) {
    // beyond d = 3 the wave kernel is no longer a nonnegative measure
    throw std::invalid_argument("FundamentalSolution: wave operator needs d <= 3");
  }
}

double FundamentalSolution::fourier(double s, double rho) const {
  if (op_ == Operator::heat) {
    return std::exp(-s * rho * rho);
  }
  const double x = s * rho;
  if (std::abs(x) < 1e-4) {
    return s * (1.0 - x * x / 6.0);
  }
  return std::sin(x) / rho;
}

namespace {

/// int_0^x sin(u)^2 du, with a series near zero to avoid cancellation.
double sin2_primitive(double x) {
  if (std::abs(x) > 0.5) {
    return 0.5 * x - 0.25 * std::sin(2.0 * x);
  }
  // sin^2 u = sum_{k>=1} (-1)^(k+1) 2^(2k-1) u^(2k) / (2k)!
  double sum = 0.0;
  double pow2 = 2.0;     // 2^(2k-1)
  double xp = x * x * x;  // x^(2k+1)
  double fact = 2.0;     // (2k)!
  for (int k = 1; k <= 12; ++k) {
    const double term = pow2 * xp / ((2.0 * k + 1.0) * fact);
    sum += (k % 2 == 1) ? term : -term;
    pow2 *= 4.0;
    xp *= x * x;
    fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
  }
  return sum;
}

}  // namespace

double FundamentalSolution::squared_time_integral(double a, double b, double rho) const {
  if (op_ == Operator::heat) {
    const double r2 = rho * rho;
    if (r2 < 1e-300) {
      return b - a;
    }
    return std::exp(-2.0 * a * r2) * (-std::expm1(-2.0 * (b - a) * r2)) / (2.0 * r2);
  }
  if (b * rho < 1e-5) {
    return (b * b * b - a * a * a) / 3.0 - rho * rho * (std::pow(b, 5) - std::pow(a, 5)) / 15.0;
  }
  return (sin2_primitive(b * rho) - sin2_primitive(a * rho)) / (rho * rho * rho);
}

double FundamentalSolution::time_integral(double s, double rho) const {
  const double r2 = rho * rho;
  if (op_ == Operator::heat) {
    return r2 < 1e-300 ? s : -std::expm1(-s * r2) / r2;
  }
  const double x = s * rho;
  if (std::abs(x) < 1e-3) {
    return s * s * (0.5 - x * x / 24.0);
  }
  // (1 - cos x) / rho^2 = 2 sin^2(x/2) / rho^2
  const double h = std::sin(0.5 * x);
  return 2.0 * h * h / r2;
}

double FundamentalSolution::total_mass_bound(double T) const {
  return op_ == Operator::heat ? 1.0 : T;
}

std::string FundamentalSolution::describe() const {
  return to_string(op_) + " d=" + std::to_string(d_);
}

}  // namespace ambitlab
