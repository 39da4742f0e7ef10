#include "hurstsense/fbm.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <iostream>
#include <mutex>
#include <stdexcept>

#include "hurstsense/rng.hpp"

namespace hurstsense {

namespace {

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// fGn autocovariance at lag k for unit step, scaled by dt^{2H}.
double fgn_autocov(double h, int k, double dt) {
  double h2 = 2.0 * h;
  double g = 0.5 * (std::pow(std::abs(k + 1), h2) -
                    2.0 * std::pow(std::abs(k), h2) +
                    std::pow(std::abs(k - 1), h2));
  return g * std::pow(dt, h2);
}

} // namespace

std::vector<double> brownian_increments(const TimeGrid& grid,
                                        SeedStream stream) {
  NormalStream rng(stream);
  double sd = std::sqrt(grid.dt());
  std::vector<double> db(grid.n_steps);
  for (auto& x : db) x = sd * rng.next_normal();
  return db;
}

CholeskySampler::CholeskySampler(HurstParam H, const TimeGrid& grid)
    : grid_(grid), H_(H) {
  int n = grid.n_steps;
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double c = fbm_covariance(H, grid.node(i + 1), grid.node(j + 1)) -
                 fbm_covariance(H, grid.node(i + 1), grid.node(j)) -
                 fbm_covariance(H, grid.node(i), grid.node(j + 1)) +
                 fbm_covariance(H, grid.node(i), grid.node(j));
      cov(i, j) = cov(j, i) = c;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    // Rounding can break positive definiteness for large n at H near 1.
    double jitter = 1e-12 * cov.diagonal().mean();
    llt.compute(cov + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "CholeskySampler: factorization failed even with jitter; "
          "try a larger jitter or fewer steps");
  }
  factor_ = llt.matrixL();
}

FbmPath CholeskySampler::sample(SeedStream stream) const {
  int n = grid_.n_steps;
  NormalStream rng(stream);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = rng.next_normal();
  Eigen::VectorXd inc = factor_.triangularView<Eigen::Lower>() * z;
  FbmPath path{grid_, H_, std::vector<double>(n + 1, 0.0)};
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += inc(i);
    path.values[i + 1] = acc;
  }
  return path;
}

CirculantSampler::CirculantSampler(HurstParam H, const TimeGrid& grid)
    : grid_(grid), H_(H) {
  int n2 = next_pow2(grid.n_steps);
  m_ = 2 * n2;
  double dt = grid.dt();
  std::vector<std::complex<double>> c(m_);
  for (int j = 0; j <= n2; ++j) c[j] = fgn_autocov(H.value(), j, dt);
  for (int j = n2 + 1; j < m_; ++j) c[j] = c[m_ - j];

  std::vector<std::complex<double>> ev(m_);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_plan p = fftw_plan_dft_1d(
        m_, reinterpret_cast<fftw_complex*>(c.data()),
        reinterpret_cast<fftw_complex*>(ev.data()), FFTW_FORWARD,
        FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
    plan_ = fftw_plan_dft_1d(m_, nullptr, nullptr, FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  sqrt_eigen_.resize(m_);
  for (int j = 0; j < m_; ++j) {
    double lam = ev[j].real();
    if (lam < -1e-9 * m_)
      // Provably nonnegative for fGn; a real negative signals a bug.
      throw std::runtime_error(
          "CirculantSampler: negative circulant eigenvalue");
    sqrt_eigen_[j] = std::sqrt(std::max(lam, 0.0));
  }
}

CirculantSampler::~CirculantSampler() {
  std::lock_guard<std::mutex> lock(fftw_plan_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

FbmPath CirculantSampler::sample(SeedStream stream) const {
  NormalStream rng(stream);
  int half = m_ / 2;
  double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m_));
  std::vector<std::complex<double>> v(m_), out(m_);
  v[0] = sqrt_eigen_[0] * rng.next_normal();
  for (int j = 1; j < half; ++j) {
    double re = rng.next_normal();
    double im = rng.next_normal();
    double s = sqrt_eigen_[j] * M_SQRT1_2;
    v[j] = std::complex<double>(s * re, s * im);
    v[m_ - j] = std::conj(v[j]);
  }
  v[half] = sqrt_eigen_[half] * rng.next_normal();

  fftw_execute_dft(static_cast<fftw_plan>(plan_),
                   reinterpret_cast<fftw_complex*>(v.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));

  int n = grid_.n_steps;
  FbmPath path{grid_, H_, std::vector<double>(n + 1, 0.0)};
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += out[i].real() * inv_sqrt_m;
    path.values[i + 1] = acc;
  }
  return path;
}

FbmPath cholesky_sample(HurstParam H, const TimeGrid& grid,
                        SeedStream stream) {
  return CholeskySampler(H, grid).sample(stream);
}

FbmPath circulant_sample(HurstParam H, const TimeGrid& grid,
                         SeedStream stream) {
  return CirculantSampler(H, grid).sample(stream);
}

FbmPath volterra_sample(HurstParam H, const TimeGrid& grid,
                        std::span<const double> brownian_increments,
                        const DiscreteOperator* op) {
  int n = grid.n_steps;
  if (static_cast<int>(brownian_increments.size()) != n)
    throw std::invalid_argument(
        "volterra_sample: increment count does not match the grid");
  FbmPath path{grid, H, std::vector<double>(n + 1, 0.0)};
  if (H.is_brownian()) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += brownian_increments[i];
      path.values[i + 1] = acc;
    }
    return path;
  }
  DiscreteOperator local{grid, H, {}};
  if (op == nullptr) {
    local = kernel_matrix(H, grid);
    op = &local;
  }
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= k; ++j)
      acc += op->matrix(k, j) * brownian_increments[j];
    path.values[k + 1] = acc;
  }
  return path;
}

CoupledFamily coupled_family(const std::vector<double>& h_list,
                             const TimeGrid& grid, SeedStream stream,
                             const std::vector<const DiscreteOperator*>& ops) {
  if (h_list.empty())
    throw std::invalid_argument("coupled_family: empty H list");
  if (!ops.empty() && ops.size() != h_list.size())
    throw std::invalid_argument(
        "coupled_family: operator list does not match H list");
  CoupledFamily family{grid, brownian_increments(grid, stream), {}};
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    HurstParam H(h_list[i]);
    const DiscreteOperator* op = ops.empty() ? nullptr : ops[i];
    family.members.emplace_back(
        H, volterra_sample(H, grid, family.brownian_increments, op));
  }
  return family;
}

void volterra_apply_serial(const DiscreteOperator& op,
                           const Eigen::MatrixXd& increments,
                           Eigen::MatrixXd& nodes) {
  int n = op.grid.n_steps;
  if (increments.rows() != n)
    throw std::invalid_argument("volterra_apply: wrong increment rows");
  nodes.resize(n, increments.cols());
  for (Eigen::Index p = 0; p < increments.cols(); ++p)
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int j = 0; j <= k; ++j)
        acc += op.matrix(k, j) * increments(j, p);
      nodes(k, p) = acc;
    }
}

void volterra_apply_blocked(const DiscreteOperator& op,
                            const Eigen::MatrixXd& increments,
                            Eigen::MatrixXd& nodes) {
  int n = op.grid.n_steps;
  if (increments.rows() != n)
    throw std::invalid_argument("volterra_apply: wrong increment rows");
  nodes.resize(n, increments.cols());
  const Eigen::Index chunk = 64; // fixed, so results ignore thread count
  Eigen::Index n_chunks = (increments.cols() + chunk - 1) / chunk;
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index c = 0; c < n_chunks; ++c) {
    Eigen::Index lo = c * chunk;
    Eigen::Index w = std::min(chunk, increments.cols() - lo);
    nodes.middleCols(lo, w).noalias() =
        op.matrix.triangularView<Eigen::Lower>() * increments.middleCols(lo, w);
  }
}

} // namespace hurstsense
