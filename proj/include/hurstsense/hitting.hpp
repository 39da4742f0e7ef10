#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hurstsense/grid.hpp"
#include "hurstsense/sde.hpp"

namespace hurstsense {

/// First-passage time of a discretized path, or censored at T_max.
struct HittingSample {
  double tau = 0.0;       // meaningful only when !censored
  bool censored = false;
  double censor_horizon = 0.0;
  int crossing_index = -1; // step index of the crossing interval, or -1
};

/// Crossing of `threshold` by the linearly interpolated path; tau is the
/// interpolated crossing time. x0 >= threshold gives tau = 0 (not an error).
HittingSample first_passage(std::span<const double> values,
                            const TimeGrid& grid, double threshold,
                            double T_max);

struct LaplaceEstimate {
  double lambda = 0.0;
  double value = 0.0;
  double std_err = 0.0;
  double truncation_bound = 0.0; // censored_fraction * e^{-lambda T_max^p}
  long n_paths = 0;
  double grid_step = 0.0;
};

struct LaplaceConfig {
  double threshold = 1.0;
  double T_max = 50.0;
  // Skip euler_solve and use x0 + B^H directly (requires b = 0, sigma = 1).
  bool pure_fbm = false;
  // H = 1/2 only: accept within-step crossings with the Brownian-bridge
  // probability exp(-2(m-X_k)(m-X_{k+1})/dt). Off by default so runs stay
  // comparable across H.
  bool bridge_correction = false;
  // Estimate E exp(-lambda tau^p); p = 2H gives the Decreusefond-Nualart
  // quantity.
  double tau_power = 1.0;
};

/// Monte Carlo estimates of E exp(-lambda tau^p) for each lambda, censored
/// samples contributing 0. Grid horizon must be >= T_max. Deterministic in
/// (master_seed), independent of thread count.
std::vector<LaplaceEstimate> laplace_mc(const ModelSpec& model, HurstParam H,
                                        const std::vector<double>& lambdas,
                                        long n_paths, const TimeGrid& grid,
                                        const LaplaceConfig& cfg,
                                        std::uint64_t master_seed);

/// u_lambda(x0) = exp(-(threshold - x0) sqrt(2 lambda)) for standard BM.
double bm_laplace_exact(double x0, double threshold, double lambda);

/// E e^{-lambda tau} for BM with drift mu hitting theta from y0 below:
/// exp(mu (theta - y0) - (theta - y0) sqrt(2 lambda + mu^2)).
double drifted_bm_laplace_exact(double y0, double theta, double mu,
                                double lambda);

/// E[ 1_{B^H_s <= 1 + eta} u_lambda(B^H_s)^p ] for B^H started at x0:
/// exp(-(1-x0) sqrt(2 lambda p^2) + s^{2H} lambda p^2)
///   * Phi(s^{-H} (1 + eta - x0) - s^H sqrt(2 lambda p^2)).
double truncated_exp_moment(double x0, double eta, double p, double s,
                            double H, double lambda);

struct AsymptoticForms {
  double dn_bound;               // exp(-(1-x0) sqrt(2 lambda))
  double molchan_exponent;       // (1-H)/(2H)
  double small_lambda_exponent;  // 1-H
  double large_lambda_exponent;  // 2H/(2H+1)
  double large_lambda_constant;  // (1 + 1/(2H)) H^{1/(2H+1)}
};

AsymptoticForms asymptotic_forms(HurstParam H, double lambda, double x0 = 0.0);

} // namespace hurstsense
