#pragma once

#include <span>
#include <vector>

namespace hurstsense {

double normal_cdf(double z);

struct KsResult {
  double statistic;
  double p_value; // asymptotic two-sample Kolmogorov-Smirnov
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Weighted least squares y ~ intercept + slope x; with weights 1/std_err^2
/// the slope standard error is 1/sqrt(sum w (x - xbar_w)^2).
struct WlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double slope_ci_lo = 0.0; // 95% normal interval
  double slope_ci_hi = 0.0;
  int n_used = 0;
};

WlsFit wls_fit(std::span<const double> x, std::span<const double> y,
               std::span<const double> weights);

} // namespace hurstsense
