#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hurstsense/fbm.hpp"
#include "hurstsense/grid.hpp"

namespace hurstsense {

using ScalarFn = std::function<double(double)>;

/// Scalar SDE coefficients with derivatives and the ellipticity constant.
/// Every sigma evaluation is checked against |sigma| >= sigma0 (the strong
/// ellipticity hypothesis behind all results used here).
struct ModelSpec {
  ScalarFn b;
  ScalarFn b_prime;
  ScalarFn sigma;
  ScalarFn sigma_prime;
  double x0 = 0.0;
  double sigma0 = 1.0;     // ellipticity lower bound
  double sigma_sup = 1.0;  // ||sigma||_inf
  double b_prime_sup = 0.0;

  double eval_sigma(double x) const;
};

ModelSpec pure_fbm_model(double x0 = 0.0);
ModelSpec ou_model(double x0 = 0.0);       // b(x) = -x, sigma = 1
ModelSpec cos_drift_model(double x0 = 0.0); // b(x) = cos x, sigma = 1
ModelSpec model_preset(const std::string& name, double x0);

struct SdePath {
  TimeGrid grid;
  HurstParam H;
  std::vector<double> values;
};

/// Heun (explicit trapezoidal) step along the given fBm driver: targets the
/// Stratonovich solution at H = 1/2 and the Young integral for H > 1/2.
SdePath euler_solve(const ModelSpec& model, const FbmPath& driver);

/// Lamperti transform F(x) = Int_0^x dz/sigma(z) with root-finding inverse
/// and the unit-diffusion drift b_tilde = (b/sigma) o F^{-1}.
struct LampertiMap {
  ScalarFn F;
  ScalarFn F_inv;
  ScalarFn b_tilde;
  double theta; // F(threshold)
};

LampertiMap lamperti(const ModelSpec& model, double threshold);

/// D_r X_t for one perturbation time r, t >= r, from the linear integral
/// equation D_r X_t = 1 + Int_r^t D_r X_s b'(X_s) ds (unit diffusion).
struct MalliavinPath {
  TimeGrid grid;
  int r_index;
  std::vector<double> values; // values[i] = D_r X_{t_{r_index+i}}
};

MalliavinPath malliavin_derivative(const ModelSpec& model, const SdePath& path,
                                   int r_index);

} // namespace hurstsense
