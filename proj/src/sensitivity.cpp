#include "hurstsense/sensitivity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "hurstsense/hitting.hpp"
#include "hurstsense/kernels.hpp"
#include "hurstsense/rng.hpp"

namespace hurstsense {

namespace {

constexpr long kChunk = 64; // fixed path-block width; see fbm.cpp

// Drives fn(path_index, values_per_h) over coupled ensembles: every H member
// of a path is the Volterra image of the same Brownian increment column
// (exact cumulated sum at H = 1/2). fn is called concurrently for distinct
// paths and must only touch path-owned state.
void for_each_coupled(
    const std::vector<double>& hs, const TimeGrid& grid, long n_paths,
    std::uint64_t master_seed,
    const std::function<void(long, const std::vector<std::vector<double>>&)>&
        fn) {
  int n = grid.n_steps;
  std::size_t nh = hs.size();
  std::vector<std::unique_ptr<DiscreteOperator>> ops(nh);
  for (std::size_t i = 0; i < nh; ++i) {
    HurstParam H(hs[i]);
    if (!H.is_brownian())
      ops[i] = std::make_unique<DiscreteOperator>(kernel_matrix(H, grid));
  }

  double sd = std::sqrt(grid.dt());
  Eigen::MatrixXd inc(n, kChunk);
  std::vector<Eigen::MatrixXd> nodes(nh);
  for (long base = 0; base < n_paths; base += kChunk) {
    long w = std::min(kChunk, n_paths - base);
#pragma omp parallel for schedule(static)
    for (long c = 0; c < w; ++c) {
      NormalStream rng(
          SeedStream{master_seed, static_cast<std::uint64_t>(base + c)});
      for (int k = 0; k < n; ++k) inc(k, c) = sd * rng.next_normal();
    }
    for (std::size_t i = 0; i < nh; ++i) {
      if (ops[i]) {
        nodes[i].noalias() =
            ops[i]->matrix.triangularView<Eigen::Lower>() * inc.leftCols(w);
      } else {
        nodes[i].resize(n, w);
        for (long c = 0; c < w; ++c) {
          double acc = 0.0;
          for (int k = 0; k < n; ++k) {
            acc += inc(k, c);
            nodes[i](k, c) = acc;
          }
        }
      }
    }
#pragma omp parallel for schedule(static)
    for (long c = 0; c < w; ++c) {
      std::vector<std::vector<double>> vals(nh,
                                            std::vector<double>(n + 1, 0.0));
      for (std::size_t i = 0; i < nh; ++i)
        for (int k = 0; k < n; ++k) vals[i][k + 1] = nodes[i](k, c);
      fn(base + c, vals);
    }
  }
}

struct MeanErr {
  double mean, se;
};

MeanErr mean_and_se(const std::vector<double>& xs) {
  double n = static_cast<double>(xs.size());
  double sum = std::accumulate(xs.begin(), xs.end(), 0.0);
  double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return MeanErr{mean, std::sqrt(ss / (n - 1.0) / n)};
}

int node_index_of(const TimeGrid& grid, double t, const char* what) {
  double dt = grid.dt();
  int idx = static_cast<int>(std::lround(t / dt));
  if (idx < 1 || idx > grid.n_steps || std::abs(grid.node(idx) - t) > 1e-9 * grid.horizon)
    throw std::invalid_argument(std::string(what) + ": t must be a grid node");
  return idx;
}

} // namespace

SensitivityReport marginal_gap(const ModelSpec& model, const ScalarFn& phi,
                               double t, const std::vector<double>& h_grid,
                               long n_paths, const TimeGrid& grid,
                               std::uint64_t master_seed) {
  if (h_grid.empty())
    throw std::invalid_argument("marginal_gap: empty H grid");
  int t_index = node_index_of(grid, t, "marginal_gap");
  std::vector<double> hs;
  hs.push_back(0.5); // baseline member
  hs.insert(hs.end(), h_grid.begin(), h_grid.end());
  std::size_t nh = hs.size();

  std::vector<std::vector<double>> phi_vals(nh,
                                            std::vector<double>(n_paths));
  for_each_coupled(hs, grid, n_paths, master_seed,
                   [&](long p, const std::vector<std::vector<double>>& v) {
                     for (std::size_t i = 0; i < nh; ++i) {
                       FbmPath driver{grid, HurstParam(hs[i]), v[i]};
                       SdePath x = euler_solve(model, driver);
                       phi_vals[i][p] = phi(x.values[t_index]);
                     }
                   });

  SensitivityReport rep;
  std::vector<double> fx, fy, fw;
  std::vector<double> diffs(n_paths);
  for (std::size_t i = 1; i < nh; ++i) {
    for (long p = 0; p < n_paths; ++p)
      diffs[p] = phi_vals[i][p] - phi_vals[0][p];
    MeanErr me = mean_and_se(diffs);
    bool used = hs[i] > 0.5 && std::abs(me.mean) > 3.0 * me.se;
    rep.points.push_back(SensitivityPoint{hs[i], me.mean, me.se, used});
    if (used) {
      double se_log = me.se / std::abs(me.mean);
      fx.push_back(std::log(hs[i] - 0.5));
      fy.push_back(std::log(std::abs(me.mean)));
      fw.push_back(1.0 / (se_log * se_log));
    }
  }
  rep.inconclusive = fx.size() < 2;
  if (!rep.inconclusive) rep.slope = wls_fit(fx, fy, fw);
  return rep;
}

DecompositionReport delta_decomposition(const ModelSpec& model,
                                        const ScalarFn& phi, double t,
                                        HurstParam H, long n_paths,
                                        const TimeGrid& grid,
                                        const PdeSolution& u,
                                        std::uint64_t master_seed) {
  int t_index = node_index_of(grid, t, "delta_decomposition");
  if (u.t + 1e-12 < t)
    throw std::invalid_argument("delta_decomposition: PDE horizon below t");
  // The decomposition is stated for the unit-diffusion model.
  for (double x : {model.x0 - 1.0, model.x0, model.x0 + 1.0})
    if (std::abs(model.sigma(x) - 1.0) > 1e-12)
      throw std::invalid_argument(
          "delta_decomposition: requires sigma identically 1 (apply the "
          "Lamperti transform first)");

  double h = H.value();
  double dt = grid.dt();
  double alpha = h * (2.0 * h - 1.0);
  bool brownian = H.is_brownian();

  // Exact cell integrals of the singular weights on the uniform grid.
  // delta1 cell i: Int (H s^{2H-1} - 1/2) ds = (s1^{2H} - s0^{2H})/2 - dt/2.
  std::vector<double> d1w(t_index);
  for (int i = 0; i < t_index; ++i)
    d1w[i] = 0.5 * (std::pow(grid.node(i + 1), 2.0 * h) -
                    std::pow(grid.node(i), 2.0 * h)) -
             0.5 * dt;
  // delta2 lag weight, distance d cells: Int_{cell} (s-r)^{2H-2} dr
  //   = dt^{2H-1} (d^{2H-1} - (d-1)^{2H-1}) / (2H-1).
  std::vector<double> lagw(t_index + 1, 0.0);
  if (!brownian)
    for (int d = 1; d <= t_index; ++d)
      lagw[d] = std::pow(dt, 2.0 * h - 1.0) *
                (std::pow(d, 2.0 * h - 1.0) - std::pow(d - 1.0, 2.0 * h - 1.0)) /
                (2.0 * h - 1.0);

  std::vector<double> lhs_p(n_paths), d1_p(n_paths), d2_p(n_paths);
  std::vector<long> clamps(n_paths, 0);
  std::vector<double> hs{0.5, h};
  for_each_coupled(
      hs, grid, n_paths, master_seed,
      [&](long p, const std::vector<std::vector<double>>& v) {
        FbmPath bm{grid, HurstParam(0.5), v[0]};
        FbmPath fbm{grid, H, v[1]};
        SdePath x_bm = euler_solve(model, bm);
        SdePath x_h = euler_solve(model, fbm);
        lhs_p[p] = phi(x_h.values[t_index]) - phi(x_bm.values[t_index]);

        long clamp = 0;
        auto uxx = [&](double s, double x) {
          if (!u.in_domain(x)) ++clamp;
          return u.dxx_at(s, x);
        };

        double d1 = 0.0;
        for (int i = 0; i < t_index; ++i) {
          double s_mid = 0.5 * (grid.node(i) + grid.node(i + 1));
          double x_mid = 0.5 * (x_h.values[i] + x_h.values[i + 1]);
          d1 += uxx(s_mid, x_mid) * d1w[i];
        }
        d1_p[p] = d1;

        double d2 = 0.0;
        if (!brownian) {
          // Prefix products of the trapezoidal Malliavin recurrence:
          // D_r X_s = P_s / P_r.
          std::vector<double> pref(t_index + 1);
          pref[0] = 1.0;
          for (int k = 0; k < t_index; ++k) {
            double rho = (1.0 + 0.5 * dt * model.b_prime(x_h.values[k])) /
                         (1.0 - 0.5 * dt * model.b_prime(x_h.values[k + 1]));
            pref[k + 1] = pref[k] * rho;
          }
          for (int i = 1; i <= t_index; ++i) {
            double inner = 0.0;
            for (int j = 0; j < i; ++j) {
              double dmid =
                  0.5 * (pref[i] / pref[j] + pref[i] / pref[j + 1]) - 1.0;
              inner += lagw[i - j] * dmid;
            }
            double wt = (i == t_index) ? 0.5 * dt : dt; // trapezoid in s
            d2 += wt * uxx(grid.node(i), x_h.values[i]) * inner;
          }
          d2 *= alpha;
        }
        d2_p[p] = d2;
        clamps[p] = clamp;
      });

  MeanErr lhs = mean_and_se(lhs_p);
  MeanErr d1 = mean_and_se(d1_p);
  MeanErr d2 = mean_and_se(d2_p);
  DecompositionReport rep;
  rep.h = h;
  rep.lhs = lhs.mean;
  rep.lhs_se = lhs.se;
  rep.delta1 = d1.mean;
  rep.delta1_se = d1.se;
  rep.delta2 = d2.mean;
  rep.delta2_se = d2.se;
  rep.residual = lhs.mean - d1.mean - d2.mean;
  rep.combined_err =
      std::sqrt(lhs.se * lhs.se + d1.se * d1.se + d2.se * d2.se);
  rep.clamp_count = std::accumulate(clamps.begin(), clamps.end(), 0L);
  long lookups =
      n_paths * (static_cast<long>(t_index) + t_index); // d1 + d2 outer
  rep.clamp_warning = rep.clamp_count > lookups / 1000;
  if (rep.clamp_warning)
    std::cerr << "delta_decomposition: warning: " << rep.clamp_count
              << " PDE-domain clamps; consider a wider domain\n";
  return rep;
}

EnvelopeReport laplace_gap(const ModelSpec& model,
                           const std::vector<double>& lambda_grid,
                           const std::vector<double>& h_grid, long n_paths,
                           const TimeGrid& grid, const EnvelopeConfig& cfg,
                           std::uint64_t master_seed) {
  if (lambda_grid.empty() || h_grid.empty())
    throw std::invalid_argument("laplace_gap: empty grid");
  if (grid.horizon < cfg.T_max)
    throw std::invalid_argument("laplace_gap: grid horizon below T_max");
  if (model.x0 >= cfg.threshold)
    throw std::invalid_argument("laplace_gap: x0 must lie below threshold");

  std::vector<double> hs;
  hs.push_back(0.5);
  hs.insert(hs.end(), h_grid.begin(), h_grid.end());
  std::size_t nh = hs.size();

  std::vector<std::vector<double>> taus(nh, std::vector<double>(n_paths));
  for_each_coupled(
      hs, grid, n_paths, master_seed,
      [&](long p, const std::vector<std::vector<double>>& v) {
        for (std::size_t i = 0; i < nh; ++i) {
          HittingSample hit;
          if (cfg.pure_fbm) {
            std::vector<double> shifted = v[i];
            for (auto& s : shifted) s += model.x0;
            hit = first_passage(shifted, grid, cfg.threshold, cfg.T_max);
          } else {
            FbmPath driver{grid, HurstParam(hs[i]), v[i]};
            SdePath x = euler_solve(model, driver);
            hit = first_passage(x.values, grid, cfg.threshold, cfg.T_max);
          }
          taus[i][p] = hit.censored
                           ? std::numeric_limits<double>::infinity()
                           : hit.tau;
        }
      });

  // mu = sup |b_tilde| over a wide scan (0 for the pure-fBm shortcut).
  double mu = 0.0;
  if (!cfg.pure_fbm) {
    for (int i = 0; i <= 1000; ++i) {
      double x = model.x0 - 10.0 +
                 (cfg.threshold + 20.0 - model.x0) * i / 1000.0;
      mu = std::max(mu, std::abs(model.b(x) / model.eval_sigma(x)));
    }
  }

  EnvelopeReport rep;
  rep.eta = cfg.eta < 0.0 ? 0.05 * (1.0 - model.x0) : cfg.eta;
  rep.eps = cfg.eps;
  rep.mu = mu;

  std::vector<double> diffs(n_paths);
  for (double lambda : lambda_grid) {
    for (std::size_t i = 1; i < nh; ++i) {
      for (long p = 0; p < n_paths; ++p) {
        double eh = std::isfinite(taus[i][p])
                        ? std::exp(-lambda * taus[i][p])
                        : 0.0;
        double eb = std::isfinite(taus[0][p])
                        ? std::exp(-lambda * taus[0][p])
                        : 0.0;
        diffs[p] = eh - eb;
      }
      MeanErr me = mean_and_se(diffs);
      bool used = hs[i] > 0.5 && std::abs(me.mean) > 3.0 * me.se;
      rep.cells.push_back(EnvelopeCell{lambda, hs[i], me.mean, me.se, used});
    }
  }

  // Decay in lambda at the largest H.
  double h_top = *std::max_element(h_grid.begin(), h_grid.end());
  std::vector<double> ax, ay, aw;
  for (const auto& c : rep.cells)
    if (c.used_in_fit && c.h == h_top) {
      double se_log = c.std_err / std::abs(c.gap);
      ax.push_back(R_func(c.lambda, mu));
      ay.push_back(std::log(std::abs(c.gap)));
      aw.push_back(1.0 / (se_log * se_log));
    }
  // Decay in H at the lambda closest to 2.
  double l_mid = lambda_grid[0];
  for (double l : lambda_grid)
    if (std::abs(l - 2.0) < std::abs(l_mid - 2.0)) l_mid = l;
  std::vector<double> hx, hy, hw;
  for (const auto& c : rep.cells)
    if (c.used_in_fit && c.lambda == l_mid) {
      double se_log = c.std_err / std::abs(c.gap);
      hx.push_back(std::log(c.h - 0.5));
      hy.push_back(std::log(std::abs(c.gap)));
      hw.push_back(1.0 / (se_log * se_log));
    }
  bool have_alpha = ax.size() >= 2, have_hurst = hx.size() >= 2;
  if (have_alpha) rep.alpha_fit = wls_fit(ax, ay, aw);
  if (have_hurst) rep.hurst_fit = wls_fit(hx, hy, hw);
  rep.inconclusive = !(have_alpha && have_hurst);
  return rep;
}

} // namespace hurstsense
