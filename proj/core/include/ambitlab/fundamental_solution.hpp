#pragma once

#include <string>

namespace ambitlab {

enum class Operator { heat, wave };

std::string to_string(Operator op);
Operator parse_operator(const std::string& name);

/// Fundamental solution of the heat operator d_t - Laplacian or the wave
/// operator d_t^2 - Laplacian on R^d, represented through its Fourier
/// transform F Lambda(s)(xi), which is radial in xi:
///   heat: exp(-s |xi|^2), wave: sin(s |xi|) / |xi|.
class FundamentalSolution {
public:
  FundamentalSolution(Operator op, int d);

  Operator op() const { return op_; }
  int dimension() const { return d_; }

  /// F Lambda(s)(xi) at |xi| = rho.
  double fourier(double s, double rho) const;

  /// int_a^b |F Lambda(s)(rho)|^2 ds in closed form.
  double squared_time_integral(double a, double b, double rho) const;

  /// int_0^s F Lambda(r)(rho) dr in closed form.
  double time_integral(double s, double rho) const;

  /// sup_{t <= T} Lambda(t, R^d), i.e. F Lambda(t)(0) maximized over t.
  double total_mass_bound(double T) const;

  std::string describe() const;

private:
  Operator op_;
  int d_;
};

}  // namespace ambitlab
