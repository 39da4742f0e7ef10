#include "hurstsense/hitting.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <memory>
#include <stdexcept>

#include "hurstsense/fbm.hpp"
#include "hurstsense/rng.hpp"

namespace hurstsense {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

} // namespace

HittingSample first_passage(std::span<const double> values,
                            const TimeGrid& grid, double threshold,
                            double T_max) {
  if (static_cast<int>(values.size()) != grid.n_nodes())
    throw std::invalid_argument("first_passage: values do not match the grid");
  if (grid.horizon < T_max)
    throw std::invalid_argument("first_passage: path horizon below T_max");
  HittingSample out;
  out.censor_horizon = T_max;
  if (values[0] >= threshold) {
    out.tau = 0.0;
    out.crossing_index = 0;
    return out;
  }
  double dt = grid.dt();
  int n = grid.n_steps;
  for (int k = 0; k < n; ++k) {
    double t1 = grid.node(k + 1);
    if (values[k + 1] >= threshold) {
      double frac = (threshold - values[k]) / (values[k + 1] - values[k]);
      double tau = grid.node(k) + frac * dt;
      if (tau > T_max) break;
      out.tau = tau;
      out.crossing_index = k;
      return out;
    }
    if (t1 >= T_max) break;
  }
  out.censored = true;
  return out;
}

std::vector<LaplaceEstimate> laplace_mc(const ModelSpec& model, HurstParam H,
                                        const std::vector<double>& lambdas,
                                        long n_paths, const TimeGrid& grid,
                                        const LaplaceConfig& cfg,
                                        std::uint64_t master_seed) {
  if (grid.horizon < cfg.T_max)
    throw std::invalid_argument("laplace_mc: grid horizon below T_max");
  if (cfg.bridge_correction && !H.is_brownian())
    throw std::invalid_argument(
        "laplace_mc: bridge correction is only valid at H = 1/2");

  // At H = 1/2 the exact path is the cumulated increment sum; skip the
  // O(n log n) embedding, which dominates at fine first-passage grids.
  std::unique_ptr<CirculantSampler> sampler;
  if (!H.is_brownian())
    sampler = std::make_unique<CirculantSampler>(H, grid);
  double dt = grid.dt();
  double m = cfg.threshold;

  // tau per path, +inf when censored; filled in parallel, reduced serially
  // so the estimates never depend on the thread count.
  std::vector<double> taus(n_paths);
#pragma omp parallel for schedule(static)
  for (long p = 0; p < n_paths; ++p) {
    SeedStream stream{master_seed, static_cast<std::uint64_t>(p)};
    if (!sampler && cfg.pure_fbm) {
      // Fused Brownian walk: draw increments only until the crossing (or the
      // censoring horizon). The variate sequence is the one brownian_increments
      // would produce, so results are unchanged; most paths stop early.
      NormalStream nrng(stream);
      NormalStream urng(SeedStream{master_seed ^ 0x9E3779B97F4A7C15ull,
                                   static_cast<std::uint64_t>(p)});
      double sd = std::sqrt(dt);
      double v0 = model.x0;
      double tau = std::numeric_limits<double>::infinity();
      if (v0 >= m) {
        tau = 0.0;
      } else {
        int n = grid.n_steps;
        for (int k = 0; k < n && grid.node(k) < cfg.T_max; ++k) {
          double v1 = v0 + sd * nrng.next_normal();
          if (v1 >= m) {
            double cand = grid.node(k) + dt * (m - v0) / (v1 - v0);
            if (cand <= cfg.T_max) tau = cand;
            break;
          }
          if (cfg.bridge_correction) {
            double a = 2.0 * (m - v0) * (m - v1) / dt;
            // prob = e^{-a}; below 1e-17 no 53-bit uniform can accept.
            if (a < 40.0 && urng.next_uniform() < std::exp(-a)) {
              tau = grid.node(k) + 0.5 * dt;
              break;
            }
          }
          v0 = v1;
        }
      }
      taus[p] = tau;
      continue;
    }
    FbmPath driver{grid, H, {}};
    if (sampler) {
      driver = sampler->sample(stream);
    } else {
      auto inc = brownian_increments(grid, stream);
      driver.values.resize(grid.n_nodes());
      driver.values[0] = 0.0;
      for (int k = 0; k < grid.n_steps; ++k)
        driver.values[k + 1] = driver.values[k] + inc[k];
    }
    const std::vector<double>* vals;
    SdePath solved{grid, H, {}};
    std::vector<double> shifted;
    if (cfg.pure_fbm) {
      shifted = driver.values;
      for (auto& v : shifted) v += model.x0;
      vals = &shifted;
    } else {
      solved = euler_solve(model, driver);
      vals = &solved.values;
    }
    HittingSample hit;
    if (!cfg.bridge_correction) {
      hit = first_passage(*vals, grid, m, cfg.T_max);
    } else {
      // Walk the steps in order; a bridge-accepted sub-grid crossing must
      // preempt any later endpoint crossing. Uniforms come from a separate
      // Philox stream keyed to the same path, so determinism is preserved.
      NormalStream urng(SeedStream{master_seed ^ 0x9E3779B97F4A7C15ull,
                                   static_cast<std::uint64_t>(p)});
      const std::vector<double>& v = *vals;
      int n = grid.n_steps;
      hit.censored = true;
      hit.censor_horizon = cfg.T_max;
      if (v[0] >= m) {
        hit = HittingSample{0.0, false, cfg.T_max, 0};
      } else {
        for (int k = 0; k < n && grid.node(k) < cfg.T_max; ++k) {
          if (v[k + 1] >= m) {
            double frac = (m - v[k]) / (v[k + 1] - v[k]);
            double tau = grid.node(k) + frac * dt;
            if (tau <= cfg.T_max)
              hit = HittingSample{tau, false, cfg.T_max, k};
            break;
          }
          double prob = std::exp(-2.0 * (m - v[k]) * (m - v[k + 1]) / dt);
          if (urng.next_uniform() < prob) {
            hit = HittingSample{grid.node(k) + 0.5 * dt, false, cfg.T_max, k};
            break;
          }
        }
      }
    }
    taus[p] = hit.censored ? std::numeric_limits<double>::infinity()
                           : hit.tau;
  }

  long censored = 0;
  for (long p = 0; p < n_paths; ++p)
    if (!std::isfinite(taus[p])) ++censored;
  double censored_fraction = static_cast<double>(censored) / n_paths;

  std::vector<LaplaceEstimate> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    if (lambda < 0.0)
      throw std::invalid_argument("laplace_mc: lambda must be nonnegative");
    double sum = 0.0, sumsq = 0.0;
    for (long p = 0; p < n_paths; ++p) {
      double x = std::isfinite(taus[p])
                     ? std::exp(-lambda * std::pow(taus[p], cfg.tau_power))
                     : 0.0;
      sum += x;
      sumsq += x * x;
    }
    LaplaceEstimate est;
    est.lambda = lambda;
    est.n_paths = n_paths;
    est.grid_step = dt;
    est.value = sum / n_paths;
    double var = (sumsq - sum * sum / n_paths) / (n_paths - 1.0);
    est.std_err = std::sqrt(std::max(var, 0.0) / n_paths);
    est.truncation_bound =
        censored_fraction *
        std::exp(-lambda * std::pow(cfg.T_max, cfg.tau_power));
    if (est.value > 0.0 &&
        std::exp(-lambda * std::pow(cfg.T_max, cfg.tau_power)) >
            0.01 * est.value)
      std::cerr << "laplace_mc: warning: censoring bound exceeds 1% of the "
                   "estimate at lambda = "
                << lambda << "; consider a larger T_max\n";
    out.push_back(est);
  }
  return out;
}

double bm_laplace_exact(double x0, double threshold, double lambda) {
  if (x0 > threshold)
    throw std::domain_error("bm_laplace_exact: x0 must be <= threshold");
  if (lambda < 0.0)
    throw std::domain_error("bm_laplace_exact: lambda must be nonnegative");
  return std::exp(-(threshold - x0) * std::sqrt(2.0 * lambda));
}

double drifted_bm_laplace_exact(double y0, double theta, double mu,
                                double lambda) {
  if (y0 > theta)
    throw std::domain_error("drifted_bm_laplace_exact: y0 must be <= theta");
  double d = theta - y0;
  return std::exp(mu * d - d * std::sqrt(2.0 * lambda + mu * mu));
}

double truncated_exp_moment(double x0, double eta, double p, double s,
                            double H, double lambda) {
  if (!(s > 0.0) || !(p > 0.0) || lambda < 0.0)
    throw std::domain_error("truncated_exp_moment: need s > 0, p > 0, "
                            "lambda >= 0");
  double sH = std::pow(s, H);
  double root = std::sqrt(2.0 * lambda * p * p);
  return std::exp(-(1.0 - x0) * root + std::pow(s, 2.0 * H) * lambda * p * p) *
         normal_cdf((1.0 + eta - x0) / sH - sH * root);
}

AsymptoticForms asymptotic_forms(HurstParam H, double lambda, double x0) {
  double h = H.value();
  AsymptoticForms f;
  f.dn_bound = std::exp(-(1.0 - x0) * std::sqrt(2.0 * lambda));
  f.molchan_exponent = (1.0 - h) / (2.0 * h);
  f.small_lambda_exponent = 1.0 - h;
  f.large_lambda_exponent = 2.0 * h / (2.0 * h + 1.0);
  f.large_lambda_constant =
      (1.0 + 1.0 / (2.0 * h)) * std::pow(h, 1.0 / (2.0 * h + 1.0));
  return f;
}

} // namespace hurstsense
