#pragma once

#include <cstdint>
#include <vector>

#include "hurstsense/grid.hpp"
#include "hurstsense/pde.hpp"
#include "hurstsense/sde.hpp"
#include "hurstsense/stats.hpp"

namespace hurstsense {

struct SensitivityPoint {
  double h;
  double gap;      // E[phi(X^H_t) - phi(X^{1/2}_t)], coupled
  double std_err;  // paired standard error
  bool used_in_fit;
};

struct SensitivityReport {
  std::vector<SensitivityPoint> points;
  WlsFit slope;       // log|gap| on log(H - 1/2), weights 1/se_log^2
  bool inconclusive;  // fewer than two points above the 3-sigma noise floor
};

/// Marginal-law sensitivity experiment: per-H marginal gaps by common random
/// numbers (one Brownian driver per path, Volterra-coupled across H), plus
/// the log-log rate regression.
SensitivityReport marginal_gap(const ModelSpec& model, const ScalarFn& phi,
                               double t, const std::vector<double>& h_grid,
                               long n_paths, const TimeGrid& grid,
                               std::uint64_t master_seed);

struct DecompositionReport {
  double h;
  double lhs, lhs_se;
  double delta1, delta1_se;
  double delta2, delta2_se;
  double residual;      // lhs - delta1 - delta2
  double combined_err;  // root-sum-square of the three standard errors
  long clamp_count = 0; // PDE-domain exits, clamped to the boundary
  bool clamp_warning = false; // more than 0.1% of lookups clamped
};

/// Exact error decomposition E phi(X^H_t) - E phi(X_t) = Delta1 + Delta2:
///   Delta1 = E Int_0^t d_xx u(s, X^H_s) (H s^{2H-1} - 1/2) ds,
///   Delta2 = H(2H-1) E Int_0^t Int_0^s |s-r|^{2H-2} (D_r X^H_s - 1)
///                                  d_xx u(s, X^H_s) dr ds,
/// all three estimated on the same coupled ensemble. Requires sigma == 1 and
/// a PDE solution for the same model and terminal datum with horizon >= t.
DecompositionReport delta_decomposition(const ModelSpec& model,
                                        const ScalarFn& phi, double t,
                                        HurstParam H, long n_paths,
                                        const TimeGrid& grid,
                                        const PdeSolution& u,
                                        std::uint64_t master_seed);

struct EnvelopeCell {
  double lambda;
  double h;
  double gap;      // E[e^{-lambda tau_H} - e^{-lambda tau_{1/2}}], coupled
  double std_err;
  bool used_in_fit;
};

struct EnvelopeReport {
  std::vector<EnvelopeCell> cells;
  WlsFit alpha_fit;  // log|gap| on R(lambda, mu) at the largest H
  WlsFit hurst_fit;  // log|gap| on log(H - 1/2) at lambda nearest 2
  double eta, eps, mu;
  bool inconclusive;
};

struct EnvelopeConfig {
  double threshold = 1.0;
  double T_max = 50.0;
  double eta = -1.0;  // < 0: default 0.05 (1 - x0)
  double eps = 0.05;
  bool pure_fbm = false; // skip euler_solve (requires b = 0, sigma = 1)
};

/// First-passage sensitivity experiment: coupled Laplace gaps over a
/// (lambda, H) grid, with decay fits in both directions. mu is taken as
/// sup |b_tilde| (0 for pure fBm).
EnvelopeReport laplace_gap(const ModelSpec& model,
                           const std::vector<double>& lambda_grid,
                           const std::vector<double>& h_grid, long n_paths,
                           const TimeGrid& grid, const EnvelopeConfig& cfg,
                           std::uint64_t master_seed);

} // namespace hurstsense
