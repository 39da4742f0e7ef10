#include "hurstsense/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hurstsense {

namespace {

// Thomas algorithm; overwrites its inputs. diag/rhs size n, sub/sup size n-1.
void tridiag_solve(std::vector<double>& sub, std::vector<double>& diag,
                   std::vector<double>& sup, std::vector<double>& rhs) {
  int n = static_cast<int>(diag.size());
  for (int i = 1; i < n; ++i) {
    if (diag[i - 1] == 0.0)
      throw std::runtime_error("tridiag_solve: singular system");
    double m = sub[i - 1] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (diag[n - 1] == 0.0)
    throw std::runtime_error("tridiag_solve: singular system");
  rhs[n - 1] /= diag[n - 1];
  for (int i = n - 2; i >= 0; --i)
    rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// First/second derivative rows from one solution row, central differences
// with second-order one-sided stencils at the edges.
void derive_row(const double* u, int n_x, double dx, double* ux, double* uxx) {
  for (int i = 1; i < n_x; ++i) {
    ux[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
    uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
  }
  ux[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
  ux[n_x] = (3.0 * u[n_x] - 4.0 * u[n_x - 1] + u[n_x - 2]) / (2.0 * dx);
  uxx[0] = (u[0] - 2.0 * u[1] + u[2]) / (dx * dx);
  uxx[n_x] = (u[n_x] - 2.0 * u[n_x - 1] + u[n_x - 2]) / (dx * dx);
}

} // namespace

double PdeSolution::interp(const std::vector<double>& field, double s,
                           double x) const {
  double xs = std::clamp(x, x_lo, x_hi);
  double ss = std::clamp(s, 0.0, t);
  double fx = (xs - x_lo) / dx();
  double fs = ss / ds();
  int i = std::min(static_cast<int>(fx), n_x - 1);
  int j = std::min(static_cast<int>(fs), n_s - 1);
  double ax = fx - i, as = fs - j;
  int w = n_x + 1;
  double f00 = field[j * w + i], f01 = field[j * w + i + 1];
  double f10 = field[(j + 1) * w + i], f11 = field[(j + 1) * w + i + 1];
  return (1 - as) * ((1 - ax) * f00 + ax * f01) +
         as * ((1 - ax) * f10 + ax * f11);
}

PdeSolution solve_backward_pde(const ScalarFn& b_tilde, const ScalarFn& phi,
                               double t, double x_lo, double x_hi, int n_x,
                               int n_s) {
  if (!(t > 0.0) || !(x_hi > x_lo) || n_x < 3 || n_s < 1)
    throw std::invalid_argument("solve_backward_pde: bad discretization");
  PdeSolution sol;
  sol.t = t;
  sol.x_lo = x_lo;
  sol.x_hi = x_hi;
  sol.n_x = n_x;
  sol.n_s = n_s;
  int w = n_x + 1;
  sol.u.assign((n_s + 1) * w, 0.0);
  sol.ux.assign((n_s + 1) * w, 0.0);
  sol.uxx.assign((n_s + 1) * w, 0.0);

  double dx = sol.dx();
  double dt = sol.ds();
  std::vector<double> b(w);
  for (int i = 0; i <= n_x; ++i) b[i] = b_tilde(sol.x_node(i));

  // Operator A u = b u_x + u_xx / 2, as tridiagonal coefficients. Boundary
  // rows use the linear-extrapolation ghost (zero curvature), which turns
  // them into one-sided advection.
  std::vector<double> Al(w), Ad(w), Au(w);
  for (int i = 1; i < n_x; ++i) {
    Al[i] = -b[i] / (2.0 * dx) + 0.5 / (dx * dx);
    Ad[i] = -1.0 / (dx * dx);
    Au[i] = b[i] / (2.0 * dx) + 0.5 / (dx * dx);
  }
  Ad[0] = -b[0] / dx;
  Au[0] = b[0] / dx;
  Al[n_x] = -b[n_x] / dx;
  Ad[n_x] = b[n_x] / dx;

  // Terminal row.
  for (int i = 0; i <= n_x; ++i) sol.u[n_s * w + i] = phi(sol.x_node(i));
  derive_row(&sol.u[n_s * w], n_x, dx, &sol.ux[n_s * w], &sol.uxx[n_s * w]);

  // Backward in s: (I - dt/2 A) u_j = (I + dt/2 A) u_{j+1}.
  std::vector<double> sub(n_x), diag(w), sup(n_x), rhs(w);
  for (int j = n_s - 1; j >= 0; --j) {
    const double* prev = &sol.u[(j + 1) * w];
    for (int i = 0; i <= n_x; ++i) {
      double au = Ad[i] * prev[i];
      if (i > 0) au += Al[i] * prev[i - 1];
      if (i < n_x) au += Au[i] * prev[i + 1];
      rhs[i] = prev[i] + 0.5 * dt * au;
      diag[i] = 1.0 - 0.5 * dt * Ad[i];
      if (i > 0) sub[i - 1] = -0.5 * dt * Al[i];
      if (i < n_x) sup[i] = -0.5 * dt * Au[i];
    }
    tridiag_solve(sub, diag, sup, rhs);
    std::copy(rhs.begin(), rhs.end(), sol.u.begin() + j * w);
    derive_row(&sol.u[j * w], n_x, dx, &sol.ux[j * w], &sol.uxx[j * w]);
  }
  return sol;
}

double default_ode_depth(double lambda) {
  return std::max(20.0, 10.0 / std::sqrt(2.0 * lambda));
}

OdeSolution solve_w_ode(const ScalarFn& b_tilde, double theta, double lambda,
                        double L, int n_y) {
  if (!(lambda > 0.0) || !(L > 0.0) || n_y < 4)
    throw std::invalid_argument("solve_w_ode: bad inputs");
  OdeSolution sol;
  sol.lambda = lambda;
  sol.theta = theta;
  sol.L = L;
  sol.n_y = n_y;
  double h = L / n_y;
  sol.y.resize(n_y + 1);
  for (int i = 0; i <= n_y; ++i) sol.y[i] = theta - L + i * h;

  // Interior rows b w' + w''/2 = lambda w, Dirichlet w(theta-L)=0,
  // w(theta)=1; eliminate the boundary values into the right-hand side.
  int m = n_y - 1;
  std::vector<double> sub(m - 1), diag(m), sup(m - 1), rhs(m, 0.0);
  for (int i = 1; i <= m; ++i) {
    double bi = b_tilde(sol.y[i]);
    double lo = -bi / (2.0 * h) + 0.5 / (h * h);
    double di = -1.0 / (h * h) - lambda;
    double hi = bi / (2.0 * h) + 0.5 / (h * h);
    diag[i - 1] = di;
    if (i > 1) sub[i - 2] = lo;
    if (i < m) sup[i - 1] = hi;
    if (i == m) rhs[i - 1] -= hi * 1.0; // w(theta) = 1
  }
  tridiag_solve(sub, diag, sup, rhs);

  sol.w.resize(n_y + 1);
  sol.w[0] = 0.0;
  sol.w[n_y] = 1.0;
  for (int i = 1; i < n_y; ++i) sol.w[i] = rhs[i - 1];

  sol.wp.resize(n_y + 1);
  sol.wpp.resize(n_y + 1);
  derive_row(sol.w.data(), n_y, h, sol.wp.data(), sol.wpp.data());
  // Third-order one-sided curvature at the threshold; the quadratic
  // extension is built from this endpoint value.
  if (n_y >= 4)
    sol.wpp[n_y] = (2.0 * sol.w[n_y] - 5.0 * sol.w[n_y - 1] +
                    4.0 * sol.w[n_y - 2] - sol.w[n_y - 3]) /
                   (h * h);
  return sol;
}

QuadraticExtension quadratic_extension(double w_prime, double w_second) {
  return QuadraticExtension{0.5 * w_second, w_prime - w_second,
                            1.0 - w_prime + 0.5 * w_second};
}

double S_func(double x, HurstParam H) {
  if (x < 0.0) throw std::domain_error("S_func: x must be nonnegative");
  return std::min(x, std::pow(x, 1.0 / (2.0 * H.value())));
}

double R_func(double lambda, double mu) {
  if (lambda < 0.0 || mu < 0.0)
    throw std::domain_error("R_func: lambda and mu must be nonnegative");
  return std::sqrt(2.0 * lambda + mu * mu) - mu;
}

OdeBoundReport check_ode_bounds(const OdeSolution& sol, double mu) {
  double R = R_func(sol.lambda, mu);
  double c_decay = std::numeric_limits<double>::infinity();
  double c_growth = 0.0;
  bool any = false;
  for (int i = 0; i <= sol.n_y; ++i) {
    double w = sol.w[i];
    if (w < 1e-12) continue; // below the truncation noise floor
    double gap = sol.theta - sol.y[i];
    if (gap * R > 1e-12) {
      c_decay = std::min(c_decay, -std::log(w) / (gap * R));
      any = true;
    }
    double growth =
        std::max(sol.wp[i], std::abs(sol.wpp[i])) / ((1.0 + sol.lambda) * w);
    c_growth = std::max(c_growth, growth);
  }
  OdeBoundReport rep;
  rep.mu = mu;
  rep.C_decay = any ? c_decay : 0.0;
  rep.C_growth = c_growth;
  rep.ok = any && std::isfinite(c_decay) && c_decay > 0.0 &&
           std::isfinite(c_growth);
  return rep;
}

} // namespace hurstsense
