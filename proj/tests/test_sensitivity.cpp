#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hurstsense/hitting.hpp"
#include "hurstsense/sensitivity.hpp"

using namespace hurstsense;

TEST_CASE("marginal gap: linear phi has no gap and is flagged inconclusive") {
  // E[B^H_t - B_t] = 0 for every H, so no point clears the noise floor.
  auto model = pure_fbm_model(0.0);
  TimeGrid grid(1.0, 64);
  auto rep = marginal_gap(model, [](double x) { return x; }, 1.0,
                          {0.6, 0.75}, 2000, grid, 301);
  CHECK(rep.inconclusive);
  for (const auto& p : rep.points) CHECK(std::abs(p.gap) < 5.0 * p.std_err);
}

TEST_CASE("marginal gap: phi = x^2 closed form at t = 2") {
  // E[(B^H_2)^2 - (B_2)^2] = 2^{2H} - 2.
  auto model = pure_fbm_model(0.0);
  TimeGrid grid(2.0, 256);
  auto rep = marginal_gap(model, [](double x) { return x * x; }, 2.0,
                          {0.6, 0.75}, 20000, grid, 311);
  for (const auto& p : rep.points) {
    double exact = std::pow(2.0, 2.0 * p.h) - 2.0;
    CHECK(std::abs(p.gap - exact) < 3.0 * p.std_err + 0.02);
    CHECK(p.used_in_fit);
  }
}

TEST_CASE("marginal gap: slope near 1 for phi = x^2") {
  auto model = pure_fbm_model(0.0);
  TimeGrid grid(2.0, 256);
  auto rep = marginal_gap(model, [](double x) { return x * x; }, 2.0,
                          {0.51, 0.53, 0.56, 0.6}, 20000, grid, 313);
  REQUIRE(!rep.inconclusive);
  CHECK(rep.slope.slope > 0.85);
  CHECK(rep.slope.slope < 1.2);
}

TEST_CASE("marginal gap: the H = 1/2 member is pathwise exact") {
  auto model = pure_fbm_model(0.0);
  TimeGrid grid(1.0, 64);
  auto rep = marginal_gap(model, [](double x) { return x * x * x; }, 1.0,
                          {0.5, 0.7}, 1000, grid, 317);
  CHECK(rep.points[0].h == 0.5);
  CHECK(rep.points[0].gap == 0.0);
  CHECK(rep.points[0].std_err == 0.0);
  CHECK(!rep.points[0].used_in_fit);
}

TEST_CASE("marginal gap is deterministic and validates inputs") {
  auto model = pure_fbm_model(0.0);
  TimeGrid grid(1.0, 32);
  auto phi = [](double x) { return std::cos(x); };
  auto a = marginal_gap(model, phi, 1.0, {0.6}, 500, grid, 331);
  auto b = marginal_gap(model, phi, 1.0, {0.6}, 500, grid, 331);
  CHECK(a.points[0].gap == b.points[0].gap);
  CHECK(a.points[0].std_err == b.points[0].std_err);
  CHECK_THROWS_AS(marginal_gap(model, phi, 1.0, {}, 100, grid, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(marginal_gap(model, phi, 0.333, {0.6}, 100, grid, 1),
                  std::invalid_argument);
}

TEST_CASE("decomposition: closed-form case b = 0, phi = x^2") {
  // Delta1 = t^{2H} - t exactly (d_xx u = 2), Delta2 = 0 (b' = 0), and the
  // left side is the coupled-MC marginal gap.
  auto model = pure_fbm_model(0.0);
  HurstParam H(0.6);
  TimeGrid grid(2.0, 256);
  auto u = solve_backward_pde([](double) { return 0.0; },
                              [](double x) { return x * x; }, 2.0, -12.0,
                              12.0, 960, 400);
  auto rep = delta_decomposition(model, [](double x) { return x * x; }, 2.0,
                                 H, 4000, grid, u, 401);
  double exact = std::pow(2.0, 1.2) - 2.0;
  CHECK(std::abs(rep.delta1 - exact) < 1e-3);
  CHECK(rep.delta1_se < 1e-6); // path-independent integrand
  CHECK(rep.delta2 == 0.0);
  CHECK(std::abs(rep.lhs - exact) < 3.0 * rep.lhs_se + 0.02);
  CHECK(std::abs(rep.residual) <=
        std::max(0.1 * std::abs(rep.lhs), 3.0 * rep.combined_err) + 0.02);
  CHECK(!rep.clamp_warning);
}

TEST_CASE("decomposition: Brownian H gives identically zero corrections") {
  auto model = pure_fbm_model(0.0);
  TimeGrid grid(1.0, 64);
  auto u = solve_backward_pde([](double) { return 0.0; },
                              [](double x) { return x * x; }, 1.0, -10.0,
                              10.0, 800, 200);
  auto rep = delta_decomposition(model, [](double x) { return x * x; }, 1.0,
                                 HurstParam(0.5), 2000, grid, u, 403);
  CHECK(rep.delta1 == 0.0);
  CHECK(rep.delta2 == 0.0);
  CHECK(std::abs(rep.lhs) < 5.0 * rep.lhs_se + 1e-12);
}

TEST_CASE("decomposition: cosine drift balances within the noise") {
  auto model = cos_drift_model(0.0);
  HurstParam H(0.6);
  TimeGrid grid(1.0, 128);
  auto u = solve_backward_pde([](double y) { return std::cos(y); },
                              [](double x) { return x; }, 1.0, -10.0, 10.0,
                              800, 400);
  auto rep = delta_decomposition(model, [](double x) { return x; }, 1.0, H,
                                 20000, grid, u, 407);
  CHECK(std::abs(rep.residual) <=
        std::max(0.1 * std::abs(rep.lhs), 3.0 * rep.combined_err) + 2e-3);
  CHECK(!rep.clamp_warning);
}

TEST_CASE("decomposition validates its preconditions") {
  TimeGrid grid(1.0, 32);
  auto u = solve_backward_pde([](double) { return 0.0; },
                              [](double x) { return x; }, 1.0, -8.0, 8.0,
                              100, 50);
  ModelSpec scaled = pure_fbm_model(0.0);
  scaled.sigma = [](double) { return 2.0; };
  scaled.sigma0 = 2.0;
  scaled.sigma_sup = 2.0;
  auto phi = [](double x) { return x; };
  CHECK_THROWS_AS(delta_decomposition(scaled, phi, 1.0, HurstParam(0.6), 100,
                                      grid, u, 1),
                  std::invalid_argument);
  auto u_short = solve_backward_pde([](double) { return 0.0; }, phi, 0.5,
                                    -8.0, 8.0, 100, 50);
  CHECK_THROWS_AS(delta_decomposition(pure_fbm_model(0.0), phi, 1.0,
                                      HurstParam(0.6), 100, grid, u_short, 1),
                  std::invalid_argument);
}

TEST_CASE("laplace gap: coupled first-passage cells (light)") {
  auto model = pure_fbm_model(0.0);
  EnvelopeConfig cfg;
  cfg.pure_fbm = true;
  cfg.T_max = 20.0;
  TimeGrid grid(20.0, 1024);
  auto rep = laplace_gap(model, {1.0, 2.0}, {0.5, 0.55, 0.7}, 5000, grid,
                         cfg, 501);
  CHECK(rep.cells.size() == 6);
  CHECK(rep.mu == 0.0);
  CHECK(rep.eta == doctest::Approx(0.05));
  double g_low = 0.0, g_high = 0.0;
  for (const auto& c : rep.cells) {
    CHECK(std::isfinite(c.gap));
    if (c.h == 0.5) {
      // The duplicate Brownian member couples to itself exactly.
      CHECK(c.gap == 0.0);
      CHECK(!c.used_in_fit);
    }
    if (c.used_in_fit) CHECK(std::abs(c.gap) > 3.0 * c.std_err);
    if (c.lambda == 2.0 && c.h == 0.55) g_low = std::abs(c.gap);
    if (c.lambda == 2.0 && c.h == 0.7) g_high = std::abs(c.gap);
  }
  CHECK(g_high > g_low);

  auto rep2 = laplace_gap(model, {1.0, 2.0}, {0.5, 0.55, 0.7}, 5000, grid,
                          cfg, 501);
  for (std::size_t i = 0; i < rep.cells.size(); ++i)
    CHECK(rep.cells[i].gap == rep2.cells[i].gap);
}

TEST_CASE("laplace gap: coupling beats independent differencing") {
  auto model = pure_fbm_model(0.0);
  EnvelopeConfig cfg;
  cfg.pure_fbm = true;
  cfg.T_max = 20.0;
  TimeGrid grid(20.0, 1024);
  auto rep = laplace_gap(model, {1.0}, {0.55}, 5000, grid, cfg, 503);

  LaplaceConfig lc;
  lc.pure_fbm = true;
  lc.T_max = 20.0;
  auto eh = laplace_mc(model, HurstParam(0.55), {1.0}, 5000, grid, lc, 601);
  auto eb = laplace_mc(model, HurstParam(0.5), {1.0}, 5000, grid, lc, 602);
  double se_indep = std::hypot(eh[0].std_err, eb[0].std_err);
  CHECK(rep.cells[0].std_err < 0.5 * se_indep);
  // Both routes agree on the gap itself.
  CHECK(std::abs(rep.cells[0].gap - (eh[0].value - eb[0].value)) <
        3.0 * (rep.cells[0].std_err + se_indep));
}

TEST_CASE("laplace gap validates inputs") {
  auto model = pure_fbm_model(0.0);
  EnvelopeConfig cfg;
  cfg.pure_fbm = true;
  cfg.T_max = 20.0;
  TimeGrid shallow(10.0, 128);
  CHECK_THROWS_AS(laplace_gap(model, {1.0}, {0.6}, 100, shallow, cfg, 1),
                  std::invalid_argument);
  auto high = pure_fbm_model(1.5);
  TimeGrid grid(20.0, 256);
  CHECK_THROWS_AS(laplace_gap(high, {1.0}, {0.6}, 100, grid, cfg, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(laplace_gap(model, {}, {0.6}, 100, grid, cfg, 1),
                  std::invalid_argument);
}
