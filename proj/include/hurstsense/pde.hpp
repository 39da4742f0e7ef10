#pragma once

#include <vector>

#include "hurstsense/grid.hpp"
#include "hurstsense/sde.hpp"

namespace hurstsense {

/// Backward-parabolic solution u(s, x) of
///   d_s u + b_tilde d_x u + (1/2) d_xx u = 0,  u(t, .) = phi,
/// on [0, t] x [x_lo, x_hi], with the second space derivative stored for the
/// sensitivity experiments.
struct PdeSolution {
  double t;
  double x_lo, x_hi;
  int n_x, n_s; // cells; node counts are n_x + 1, n_s + 1
  // Row-major (n_s + 1) x (n_x + 1); row j is time s_j = j t / n_s.
  std::vector<double> u, ux, uxx;

  double s_node(int j) const { return j * t / n_s; }
  double x_node(int i) const { return x_lo + i * (x_hi - x_lo) / n_x; }
  double dx() const { return (x_hi - x_lo) / n_x; }
  double ds() const { return t / n_s; }

  /// Bilinear interpolation; x outside the domain is clamped to the edge.
  double value_at(double s, double x) const { return interp(u, s, x); }
  double dxx_at(double s, double x) const { return interp(uxx, s, x); }
  bool in_domain(double x) const { return x >= x_lo && x <= x_hi; }

private:
  double interp(const std::vector<double>& field, double s, double x) const;
};

/// Crank-Nicolson with centered space differences; artificial boundaries use
/// zero curvature (linear extrapolation ghosts). phi is the terminal datum.
PdeSolution solve_backward_pde(const ScalarFn& b_tilde, const ScalarFn& phi,
                               double t, double x_lo, double x_hi, int n_x,
                               int n_s);

/// Solution of b_tilde w' + (1/2) w'' = lambda w on [theta - L, theta] with
/// w(theta) = 1 and the truncated far-field condition w(theta - L) = 0.
struct OdeSolution {
  double lambda;
  double theta;
  double L;
  int n_y; // cells
  std::vector<double> y, w, wp, wpp;
};

OdeSolution solve_w_ode(const ScalarFn& b_tilde, double theta, double lambda,
                        double L, int n_y);

/// Default truncation depth max(20, 10/sqrt(2 lambda)).
double default_ode_depth(double lambda);

/// C^2 quadratic extension past the threshold (normalized so the value is 1
/// at x = 1): a = w''/2, b = w' - w'', c = 1 - w' + w''/2, for ax^2 + bx + c.
struct QuadraticExtension {
  double a, b, c;
};

QuadraticExtension quadratic_extension(double w_prime, double w_second);

/// S(x) = min(x, x^{1/(2H)}) and R(lambda) = sqrt(2 lambda + mu^2) - mu.
double S_func(double x, HurstParam H);
double R_func(double lambda, double mu);

/// Fit of the exponential decay / derivative growth bounds on a solved ODE:
///   w(y)  <= exp(-C_decay (theta - y) R(lambda, mu)),
///   w'(y) <= C_growth (1 + lambda) w(y),
///   |w''(y)| <= C_growth (1 + lambda) w(y).
/// C_decay is the largest constant for which the first holds on the grid;
/// C_growth the smallest for which the last two hold. mu should be
/// sup |b_tilde|.
struct OdeBoundReport {
  double C_decay;
  double C_growth;
  double mu;
  bool ok; // finite positive C_decay and finite C_growth found
};

OdeBoundReport check_ode_bounds(const OdeSolution& sol, double mu);

} // namespace hurstsense
