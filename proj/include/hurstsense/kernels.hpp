#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hurstsense/grid.hpp"

namespace hurstsense {

struct QuadratureConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 400;
};

/// c_H = (2H Gamma(3/2-H) / (Gamma(H+1/2) Gamma(2-2H)))^{1/2}; tends to 1
/// as H -> 1/2.
double c_const(HurstParam H);

/// Volterra kernel K_H(theta, sigma); zero for sigma >= theta. Evaluated by
/// adaptive quadrature after substituting away the (u-sigma)^{H-3/2}
/// endpoint singularity. Throws on non-convergence.
double kernel_K(HurstParam H, double theta, double sigma,
                const QuadratureConfig& q = {});

/// Same kernel through the closed form
///   K_H(t,s) = c_H (t-s)^{H-1/2} (t/s)^{H-1/2} 2F1(1/2-H, 1; H+1/2; 1-s/t),
/// much cheaper than quadrature; used to assemble the discrete operator.
double kernel_K_closed(HurstParam H, double theta, double sigma);

/// Gauss hypergeometric 2F1(a, 1; c; x) for x in [0, 1); exposed for tests.
double hyp2f1_b1(double a, double c, double x);

/// Lower-triangular discretization of the Volterra operator on a uniform
/// grid: entry (k, j), j < k, is the cell average
/// (1/dt) Int_{t_j}^{t_{j+1}} K_H(t_{k+1}, u) du, so row k maps Brownian
/// increments to the fBm value at node k+1.
struct DiscreteOperator {
  TimeGrid grid;
  HurstParam H;
  Eigen::MatrixXd matrix;
};

DiscreteOperator kernel_matrix(HurstParam H, const TimeGrid& grid,
                               const QuadratureConfig& q = {});

/// Adjoint operator K_H* applied to a step function given by cell values;
/// returns values at cell midpoints. Identity at H = 1/2.
std::vector<double> adjoint_apply(HurstParam H,
                                  const std::vector<double>& phi_cells,
                                  const TimeGrid& grid);

/// | Int_0^{s^t} K_H(s,u) K_H(t,u) du  -  R_H(s,t) |.
double factorization_residual(HurstParam H, double s, double t,
                              const QuadratureConfig& q = {});

/// fBm covariance R_H(s,t) = (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
double fbm_covariance(HurstParam H, double s, double t);

} // namespace hurstsense
