#include "hurstsense/sde.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hurstsense {

double ModelSpec::eval_sigma(double x) const {
  double s = sigma(x);
  if (std::abs(s) < sigma0 * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "ModelSpec: ellipticity violated, |sigma(" << x << ")| = "
        << std::abs(s) << " < sigma0 = " << sigma0;
    throw std::runtime_error(msg.str());
  }
  return s;
}

ModelSpec pure_fbm_model(double x0) {
  ModelSpec m;
  m.b = [](double) { return 0.0; };
  m.b_prime = [](double) { return 0.0; };
  m.sigma = [](double) { return 1.0; };
  m.sigma_prime = [](double) { return 0.0; };
  m.x0 = x0;
  m.sigma0 = 1.0;
  m.sigma_sup = 1.0;
  m.b_prime_sup = 0.0;
  return m;
}

ModelSpec ou_model(double x0) {
  ModelSpec m = pure_fbm_model(x0);
  m.b = [](double x) { return -x; };
  m.b_prime = [](double) { return -1.0; };
  m.b_prime_sup = 1.0;
  return m;
}

ModelSpec cos_drift_model(double x0) {
  ModelSpec m = pure_fbm_model(x0);
  m.b = [](double x) { return std::cos(x); };
  m.b_prime = [](double x) { return -std::sin(x); };
  m.b_prime_sup = 1.0;
  return m;
}

ModelSpec model_preset(const std::string& name, double x0) {
  if (name == "pure-fbm") return pure_fbm_model(x0);
  if (name == "ou") return ou_model(x0);
  if (name == "cos-drift") return cos_drift_model(x0);
  throw std::invalid_argument("unknown model preset: " + name);
}

SdePath euler_solve(const ModelSpec& model, const FbmPath& driver) {
  const TimeGrid& grid = driver.grid;
  int n = grid.n_steps;
  double dt = grid.dt();
  SdePath path{grid, driver.H, std::vector<double>(n + 1)};
  double x = model.x0;
  path.values[0] = x;
  for (int k = 0; k < n; ++k) {
    double db = driver.values[k + 1] - driver.values[k];
    double bk = model.b(x);
    double sk = model.eval_sigma(x);
    double pred = x + bk * dt + sk * db;
    x += 0.5 * (bk + model.b(pred)) * dt +
         0.5 * (sk + model.eval_sigma(pred)) * db;
    if (!std::isfinite(x)) {
      std::ostringstream msg;
      msg << "euler_solve: non-finite state at step " << k + 1;
      throw std::runtime_error(msg.str());
    }
    path.values[k + 1] = x;
  }
  return path;
}

namespace {

double integrate_inv_sigma(const ModelSpec& model, double x) {
  if (x == 0.0) return 0.0;
  gsl_function gf;
  struct Ctx {
    const ModelSpec* m;
  } ctx{&model};
  gf.function = [](double z, void* p) {
    return 1.0 / static_cast<Ctx*>(p)->m->eval_sigma(z);
  };
  gf.params = &ctx;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(200);
  double result = 0.0, abserr = 0.0;
  int status = gsl_integration_qags(&gf, 0.0, x, 1e-12, 1e-12, 200, ws,
                                    &result, &abserr);
  gsl_integration_workspace_free(ws);
  if (status != GSL_SUCCESS && status != GSL_EROUND)
    throw std::runtime_error("lamperti: quadrature for F failed");
  return result;
}

} // namespace

LampertiMap lamperti(const ModelSpec& model, double threshold) {
  // F' = 1/sigma never changes sign under ellipticity.
  double sign = model.eval_sigma(0.0) > 0.0 ? 1.0 : -1.0;
  auto F = [model](double x) { return integrate_inv_sigma(model, x); };
  auto F_inv = [F, sign](double y) {
    double lo = -1.0, hi = 1.0;
    auto g = [&](double x) { return sign * (F(x) - y); };
    for (int i = 0; i < 200 && g(lo) > 0.0; ++i) lo *= 2.0;
    for (int i = 0; i < 200 && g(hi) < 0.0; ++i) hi *= 2.0;
    if (g(lo) > 0.0 || g(hi) < 0.0)
      throw std::runtime_error("lamperti: could not bracket F^{-1}");
    // Safeguarded bisection with a secant proposal.
    double glo = g(lo), ghi = g(hi);
    for (int i = 0; i < 200; ++i) {
      double mid = (ghi != glo)
                       ? lo - glo * (hi - lo) / (ghi - glo)
                       : 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
      double gm = g(mid);
      if (gm == 0.0 || hi - lo < 1e-12) return mid;
      if (gm < 0.0) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
        ghi = gm;
      }
    }
    return 0.5 * (lo + hi);
  };
  auto b_tilde = [model, F_inv](double y) {
    double x = F_inv(y);
    return model.b(x) / model.eval_sigma(x);
  };
  return LampertiMap{F, F_inv, b_tilde, F(threshold)};
}

MalliavinPath malliavin_derivative(const ModelSpec& model, const SdePath& path,
                                   int r_index) {
  int n = path.grid.n_steps;
  if (r_index < 0 || r_index > n)
    throw std::invalid_argument("malliavin_derivative: r_index out of range");
  double dt = path.grid.dt();
  MalliavinPath out{path.grid, r_index, std::vector<double>(n - r_index + 1)};
  out.values[0] = 1.0;
  double d = 1.0;
  for (int k = r_index; k < n; ++k) {
    // Trapezoidal rule on dD/dt = b'(X_t) D, implicit in the new value.
    double g0 = model.b_prime(path.values[k]);
    double g1 = model.b_prime(path.values[k + 1]);
    d = d * (1.0 + 0.5 * dt * g0) / (1.0 - 0.5 * dt * g1);
    out.values[k - r_index + 1] = d;
  }
  return out;
}

} // namespace hurstsense
