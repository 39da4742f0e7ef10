#include "hurstsense/kernels.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

namespace hurstsense {

namespace {

// GSL reports through return codes; exceptions are raised at call sites.
const int g_gsl_handler_off = [] {
  gsl_set_error_handler_off();
  return 0;
}();

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const {
    gsl_integration_workspace_free(w);
  }
};
using Workspace =
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter>;

Workspace make_workspace(int n) {
  return Workspace(gsl_integration_workspace_alloc(n));
}

double qags(const std::function<double(double)>& f, double a, double b,
            const QuadratureConfig& q, const char* what) {
  gsl_function gf;
  gf.function = [](double x, void* p) {
    return (*static_cast<const std::function<double(double)>*>(p))(x);
  };
  gf.params = const_cast<void*>(static_cast<const void*>(&f));
  auto ws = make_workspace(q.max_subdivisions);
  double result = 0.0, abserr = 0.0;
  int status = gsl_integration_qags(&gf, a, b, q.abs_tol, q.rel_tol,
                                    q.max_subdivisions, ws.get(), &result,
                                    &abserr);
  if (status != GSL_SUCCESS && status != GSL_EROUND) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge (status " << status
        << ", residual estimate " << abserr << ")";
    throw std::runtime_error(msg.str());
  }
  return result;
}

// Generic 2F1 power series, valid for small |z|.
double hyp2f1_series(double a, double b, double c, double z) {
  double term = 1.0, sum = 1.0;
  for (int n = 0; n < 2000; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) return sum;
  }
  throw std::runtime_error("hyp2f1_series: no convergence");
}

} // namespace

double c_const(HurstParam H) {
  double h = H.value();
  if (h == 0.5) return 1.0;
  return std::sqrt(2.0 * h * std::tgamma(1.5 - h) /
                   (std::tgamma(h + 0.5) * std::tgamma(2.0 - 2.0 * h)));
}

double fbm_covariance(HurstParam H, double s, double t) {
  if (s < 0.0 || t < 0.0)
    throw std::domain_error("fbm_covariance: negative time");
  double h2 = 2.0 * H.value();
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) -
                std::pow(std::abs(t - s), h2));
}

double hyp2f1_b1(double a, double c, double x) {
  if (x < 0.0 || x >= 1.0)
    throw std::domain_error("hyp2f1_b1: x must lie in [0,1)");
  if (x < 0.7) return hyp2f1_series(a, 1.0, c, x);
  // Linear transformation in powers of 1-x. Assumes c-a-1 non-integer,
  // which holds for the kernel parameters (c-a-1 = 2H-1 in (0,1)).
  double s = c - a - 1.0;
  double y = 1.0 - x;
  double A = std::tgamma(c) * std::tgamma(s) /
             (std::tgamma(c - a) * std::tgamma(c - 1.0));
  double B = std::tgamma(c) * std::tgamma(-s) / std::tgamma(a);
  return A * hyp2f1_series(a, 1.0, 1.0 - s, y) +
         B * std::pow(y, s) * hyp2f1_series(c - a, c - 1.0, 1.0 + s, y);
}

double kernel_K_closed(HurstParam H, double theta, double sigma) {
  if (!(theta > 0.0) || !(sigma > 0.0))
    throw std::domain_error("kernel_K: times must be positive");
  if (sigma >= theta) return 0.0;
  double h = H.value();
  if (h == 0.5) return 1.0;
  double x = 1.0 - sigma / theta;
  return c_const(H) * std::pow(theta - sigma, h - 0.5) *
         std::pow(theta / sigma, h - 0.5) *
         hyp2f1_b1(0.5 - h, h + 0.5, x);
}

double kernel_K(HurstParam H, double theta, double sigma,
                const QuadratureConfig& q) {
  if (!(theta > 0.0) || !(sigma > 0.0))
    throw std::domain_error("kernel_K: times must be positive");
  if (sigma >= theta) return 0.0;
  double h = H.value();
  if (h == 0.5) return 1.0;
  // Substitute w = (u - sigma)^{H-1/2}; the singular factor becomes dw.
  double p = 1.0 / (h - 0.5);
  double w_max = std::pow(theta - sigma, h - 0.5);
  std::function<double(double)> integrand = [=](double w) {
    return std::pow(sigma + std::pow(w, p), h - 0.5);
  };
  double integral = qags(integrand, 0.0, w_max, q, "kernel_K");
  return c_const(H) * std::pow(sigma, 0.5 - h) * integral;
}

DiscreteOperator kernel_matrix(HurstParam H, const TimeGrid& grid,
                               const QuadratureConfig& q) {
  int n = grid.n_steps;
  double dt = grid.dt();
  DiscreteOperator op{grid, H, Eigen::MatrixXd::Zero(n, n)};
  if (H.is_brownian()) {
    for (int k = 0; k < n; ++k)
      for (int j = 0; j <= k; ++j) op.matrix(k, j) = 1.0;
    return op;
  }

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    double t = grid.node(k + 1);
    auto ws = make_workspace(q.max_subdivisions);
    std::function<double(double)> f = [&](double u) {
      return kernel_K_closed(H, t, u);
    };
    gsl_function gf;
    gf.function = [](double x, void* p) {
      return (*static_cast<std::function<double(double)>*>(p))(x);
    };
    gf.params = &f;
    for (int j = 0; j <= k; ++j) {
      double a = grid.node(j), b = grid.node(j + 1);
      double result = 0.0, abserr = 0.0, resabs = 0.0, resasc = 0.0;
      bool edge = (j == 0) || (j == k);
      if (!edge) {
        gsl_integration_qk15(&gf, a, b, &result, &abserr, &resabs, &resasc);
        edge = abserr > std::max(q.abs_tol, q.rel_tol * std::abs(result));
      }
      if (edge) {
        // First cell (sigma^{1/2-H} endpoint) and diagonal cell
        // ((t-sigma)^{H-1/2} endpoint) need adaptive refinement.
        int status = gsl_integration_qags(&gf, a, b, q.abs_tol, q.rel_tol,
                                          q.max_subdivisions, ws.get(),
                                          &result, &abserr);
        if (status != GSL_SUCCESS && status != GSL_EROUND)
          throw std::runtime_error(
              "kernel_matrix: cell quadrature did not converge");
      }
      op.matrix(k, j) = result / dt;
    }
  }
  return op;
}

std::vector<double> adjoint_apply(HurstParam H,
                                  const std::vector<double>& phi_cells,
                                  const TimeGrid& grid) {
  int n = grid.n_steps;
  if (static_cast<int>(phi_cells.size()) != n)
    throw std::invalid_argument("adjoint_apply: need one value per cell");
  if (H.is_brownian()) return phi_cells;
  // d/dtheta K_H(theta,s) integrates back to K_H itself, so the exact
  // cell weight for a step function is K_H(cell end, s) - K_H(cell
  // start, s).
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.5 * (grid.node(i) + grid.node(i + 1));
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      double a = std::max(grid.node(j), s);
      double b = grid.node(j + 1);
      if (b <= a) continue;
      double wa = (a > s) ? kernel_K_closed(H, a, s) : 0.0;
      acc += phi_cells[j] * (kernel_K_closed(H, b, s) - wa);
    }
    out[i] = acc;
  }
  return out;
}

double factorization_residual(HurstParam H, double s, double t,
                              const QuadratureConfig& q) {
  if (!(s > 0.0) || !(t > 0.0))
    throw std::domain_error("factorization_residual: times must be positive");
  double upper = std::min(s, t);
  std::function<double(double)> f = [&](double u) {
    return kernel_K_closed(H, s, u) * kernel_K_closed(H, t, u);
  };
  double integral = qags(f, 0.0, upper, q, "factorization_residual");
  return std::abs(integral - fbm_covariance(H, s, t));
}

} // namespace hurstsense
