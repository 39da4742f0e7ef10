#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hurstsense/grid.hpp"
#include "hurstsense/sde.hpp"

namespace hurstsense {

/// Histogram of X^H_t across paths: n_bins equal interior bins plus
/// underflow/overflow, so every sample is binned and total mass is exactly 1.
struct DensityEstimate {
  double t = 0.0;
  double h_value = 0.5;
  double x0 = 0.0;
  long n_paths = 0;
  std::vector<double> edges;  // n_bins + 1 interior edges
  std::vector<long> counts;   // n_bins + 2: [underflow, interior..., overflow]

  int n_bins() const { return static_cast<int>(edges.size()) - 1; }
  double bin_width() const { return edges[1] - edges[0]; }
  double density(int bin) const;   // interior bin index, per unit length
  double std_err(int bin) const;   // binomial, per unit length
};

/// 80 equal bins over x0 +- 6 ||sigma||_inf t^H by default. t must be within
/// half a step of a grid node.
DensityEstimate estimate_density(const ModelSpec& model, HurstParam H,
                                 double t, long n_paths, const TimeGrid& grid,
                                 std::uint64_t master_seed, int n_bins = 80);

/// Gaussian density envelope
///   e^{Ct} / sqrt(2 pi t^{2H}) * exp(-(x - x0)^2 / (2 ||sigma||^2 t^{2H})).
double gaussian_bound(double x, double t, HurstParam H, double x0,
                      double sigma_sup, double C);

struct GaussianBoundFit {
  double C = 0.0;
  double sigma_sup = 1.0;
  double x0 = 0.0;
  double binding_t = 0.0;  // (t, bin midpoint) where the fit is tight
  double binding_x = 0.0;
};

/// Smallest C >= 0 such that the bound dominates (density - 3 std_err) in
/// every interior bin of every estimate, bound evaluated at bin midpoints.
GaussianBoundFit fit_min_C(const std::vector<DensityEstimate>& estimates,
                           HurstParam H, double sigma_sup, double x0);

struct HolderNormSample {
  double gamma;
  double a, b;
  double value;
  bool dyadic_restricted; // large windows use dyadic separations only
};

/// Discrete sup of |f(t)-f(s)| / (t-s)^gamma over grid pairs in [a, b]; all
/// pairs up to 2048 window nodes, dyadic separations beyond (underestimates
/// by at most a factor 2^gamma).
HolderNormSample holder_norm(std::span<const double> values,
                             const TimeGrid& grid, double gamma, double a,
                             double b);

/// Holder-norm tail bound
///   (4 + sqrt(2) (b-a)^2) exp(-K x^2 / (2 (b-a)^{2(H-gamma-eps)})),
/// K = eps / (2 (8 (gamma+eps))^2); requires 0 < gamma < H, 0 < eps < H-gamma.
double holder_tail_bound(double gamma, double eps, HurstParam H, double a,
                         double b, double x);

} // namespace hurstsense
