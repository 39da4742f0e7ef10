#include "hurstsense/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hurstsense {

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

namespace {

// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 l^2}.
double ks_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

} // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("ks_two_sample: samples too small");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double xa = a[i], xb = b[j];
    if (xa <= xb) ++i;
    if (xb <= xa) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  double ne = std::sqrt(na * nb / (na + nb));
  double lambda = (ne + 0.12 + 0.11 / ne) * d;
  return KsResult{d, ks_q(lambda)};
}

WlsFit wls_fit(std::span<const double> x, std::span<const double> y,
               std::span<const double> weights) {
  std::size_t n = x.size();
  if (y.size() != n || weights.size() != n || n < 2)
    throw std::invalid_argument("wls_fit: need matching arrays, n >= 2");
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += weights[i];
    swx += weights[i] * x[i];
    swy += weights[i] * y[i];
  }
  double xbar = swx / sw, ybar = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - xbar;
    sxx += weights[i] * dx * dx;
    sxy += weights[i] * dx * (y[i] - ybar);
  }
  if (sxx <= 0.0) throw std::invalid_argument("wls_fit: degenerate abscissae");
  WlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  fit.slope_se = 1.0 / std::sqrt(sxx);
  fit.slope_ci_lo = fit.slope - 1.959963984540054 * fit.slope_se;
  fit.slope_ci_hi = fit.slope + 1.959963984540054 * fit.slope_se;
  fit.n_used = static_cast<int>(n);
  return fit;
}

} // namespace hurstsense
