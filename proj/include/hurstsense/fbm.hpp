#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

#include "hurstsense/grid.hpp"
#include "hurstsense/kernels.hpp"

namespace hurstsense {

struct FbmPath {
  TimeGrid grid;
  HurstParam H;
  std::vector<double> values; // one per node, values[0] = 0
};

/// Exact sampler factoring the increment covariance once (Cholesky with a
/// single jittered retry). Feasible up to a few thousand steps.
class CholeskySampler {
public:
  CholeskySampler(HurstParam H, const TimeGrid& grid);
  FbmPath sample(SeedStream stream) const;

private:
  TimeGrid grid_;
  HurstParam H_;
  Eigen::MatrixXd factor_; // lower triangular
};

/// Davies-Harte circulant embedding of fractional Gaussian noise; exact in
/// law, O(n log n) per path. n_steps is padded to a power of two internally
/// and the path truncated back.
class CirculantSampler {
public:
  CirculantSampler(HurstParam H, const TimeGrid& grid);
  ~CirculantSampler();
  CirculantSampler(const CirculantSampler&) = delete;
  CirculantSampler& operator=(const CirculantSampler&) = delete;

  FbmPath sample(SeedStream stream) const;

private:
  TimeGrid grid_;
  HurstParam H_;
  int m_; // embedding size (2 * padded n)
  std::vector<double> sqrt_eigen_;
  void* plan_; // fftw_plan
};

FbmPath cholesky_sample(HurstParam H, const TimeGrid& grid, SeedStream stream);
FbmPath circulant_sample(HurstParam H, const TimeGrid& grid, SeedStream stream);

/// Discretized Volterra representation: node k gets
/// sum_{j<k} M(k-1,j) dB_j. For H = 1/2 this is exactly the cumulated
/// increments. `op`, when given, must match (H, grid).
FbmPath volterra_sample(HurstParam H, const TimeGrid& grid,
                        std::span<const double> brownian_increments,
                        const DiscreteOperator* op = nullptr);

/// Family of fBm paths across H driven by one Brownian increment vector
/// (common random numbers device).
struct CoupledFamily {
  TimeGrid grid;
  std::vector<double> brownian_increments;
  std::vector<std::pair<HurstParam, FbmPath>> members;
};

CoupledFamily coupled_family(const std::vector<double>& h_list,
                             const TimeGrid& grid, SeedStream stream,
                             const std::vector<const DiscreteOperator*>& ops =
                                 {});

/// Brownian increments N(0, dt) for one path, in step order.
std::vector<double> brownian_increments(const TimeGrid& grid,
                                        SeedStream stream);

/// Applies the Volterra operator to a block of increment columns
/// (n_steps x n_paths) producing node values (rows 1..n_steps; the zero
/// node is implicit). Serial reference for the blocked OpenMP version.
void volterra_apply_serial(const DiscreteOperator& op,
                           const Eigen::MatrixXd& increments,
                           Eigen::MatrixXd& nodes);

/// Blocked version: fixed-width column chunks, each a single-threaded
/// matrix product, distributed over OpenMP threads. Chunking is independent
/// of the thread count, so the output never depends on how many threads run.
void volterra_apply_blocked(const DiscreteOperator& op,
                            const Eigen::MatrixXd& increments,
                            Eigen::MatrixXd& nodes);

} // namespace hurstsense
