#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hurstsense/hitting.hpp"
#include "hurstsense/rng.hpp"

using namespace hurstsense;

TEST_CASE("first passage on deterministic paths") {
  TimeGrid grid(1.0, 10); // dt = 0.1
  std::vector<double> ramp(11);
  for (int k = 0; k <= 10; ++k) ramp[k] = 0.1 * k;
  auto hit = first_passage(ramp, grid, 0.5, 1.0);
  CHECK(!hit.censored);
  CHECK(hit.tau == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<double> low(11, -1.0);
  CHECK(first_passage(low, grid, 0.5, 1.0).censored);

  std::vector<double> at(11, 0.0);
  at[0] = 1.0;
  auto immediate = first_passage(at, grid, 1.0, 1.0);
  CHECK(!immediate.censored);
  CHECK(immediate.tau == 0.0);
}

TEST_CASE("closed forms") {
  CHECK(bm_laplace_exact(0.0, 1.0, 0.5) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(bm_laplace_exact(1.0, 1.0, 7.0) == 1.0);
  CHECK(bm_laplace_exact(0.2, 1.0, 0.0) == 1.0);

  CHECK(drifted_bm_laplace_exact(0.3, 1.0, 0.0, 0.8) ==
        doctest::Approx(bm_laplace_exact(0.3, 1.0, 0.8)).epsilon(1e-14));
  CHECK(drifted_bm_laplace_exact(1.0, 1.0, 0.5, 2.0) == 1.0);
  // sqrt(2 * 1.5 + 1) = 2, so the exponent is 1 - 2 = -1.
  CHECK(drifted_bm_laplace_exact(0.0, 1.0, 1.0, 1.5) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("truncated exponential moment closed form") {
  // exp(-0.5) * Phi(0), hand evaluation.
  CHECK(truncated_exp_moment(0.0, 0.0, 1.0, 1.0, 0.5, 0.5) ==
        doctest::Approx(0.30326532985631671).epsilon(1e-14));
  // lambda = 0 and a huge truncation level: indicator is a.s. 1.
  CHECK(truncated_exp_moment(0.0, 10.0, 1.0, 1.0, 0.75, 0.0) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("truncated exponential moment against direct sampling") {
  struct Case {
    double x0, eta, p, s, h, lambda;
  };
  const Case cases[] = {
      {0.0, 0.1, 1.0, 0.5, 0.75, 1.0},
      {0.2, 0.05, 2.0, 1.0, 0.6, 0.5},
      {-0.5, 0.3, 1.5, 2.0, 0.9, 2.0},
  };
  const long n = 1000000;
  for (const auto& c : cases) {
    NormalStream rng(SeedStream{1234, 0});
    double sd = std::pow(c.s, c.h);
    double sum = 0.0, sumsq = 0.0;
    for (long i = 0; i < n; ++i) {
      double b = c.x0 + sd * rng.next_normal();
      double v = 0.0;
      if (b <= 1.0 + c.eta)
        v = std::pow(std::exp(-(1.0 - b) * std::sqrt(2.0 * c.lambda)), c.p);
      sum += v;
      sumsq += v * v;
    }
    double mean = sum / n;
    double se = std::sqrt((sumsq / n - mean * mean) / (n - 1.0));
    double closed = truncated_exp_moment(c.x0, c.eta, c.p, c.s, c.h, c.lambda);
    CHECK(std::abs(closed - mean) < 3.0 * se);
  }
}

TEST_CASE("asymptotic forms") {
  auto f_bm = asymptotic_forms(HurstParam(0.5), 2.0);
  CHECK(f_bm.molchan_exponent == doctest::Approx(0.5));
  CHECK(f_bm.large_lambda_exponent == doctest::Approx(0.5));
  CHECK(f_bm.large_lambda_constant == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  // Brownian reduction: -log E e^{-lambda tau} = sqrt(2 lambda).
  CHECK(f_bm.large_lambda_constant * std::pow(2.0, f_bm.large_lambda_exponent) ==
        doctest::Approx(std::sqrt(4.0)).epsilon(1e-14));
  CHECK(f_bm.dn_bound == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));

  auto f = asymptotic_forms(HurstParam(0.75), 1.0);
  CHECK(f.molchan_exponent == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(f.large_lambda_exponent == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(f.small_lambda_exponent == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("laplace MC with bridge correction matches the Brownian formula") {
  LaplaceConfig cfg;
  cfg.pure_fbm = true;
  cfg.bridge_correction = true;
  cfg.T_max = 10.0;
  TimeGrid grid(10.0, 5000);
  auto model = pure_fbm_model(0.0);
  auto ests = laplace_mc(model, HurstParam(0.5), {0.5, 1.0}, 20000, grid, cfg,
                         2024);
  for (const auto& e : ests) {
    double exact = bm_laplace_exact(0.0, 1.0, e.lambda);
    CHECK(std::abs(e.value - exact) <
          3.0 * e.std_err + e.truncation_bound + 0.005);
    CHECK(e.value >= 0.0);
    CHECK(e.value <= 1.0);
  }
  // Monotone in lambda on the same tau draws.
  CHECK(ests[0].value > ests[1].value);
}

TEST_CASE("laplace MC at lambda = 0 estimates the hitting probability") {
  LaplaceConfig cfg;
  cfg.pure_fbm = true;
  cfg.T_max = 5.0;
  TimeGrid grid(5.0, 1000);
  auto ests = laplace_mc(pure_fbm_model(0.0), HurstParam(0.75), {0.0}, 5000,
                         grid, cfg, 7);
  CHECK(ests[0].value <= 1.0);
  CHECK(ests[0].value > 0.5);
  CHECK(ests[0].truncation_bound ==
        doctest::Approx(1.0 - ests[0].value).epsilon(0.2));
}

TEST_CASE("laplace MC is deterministic and rejects bad inputs") {
  LaplaceConfig cfg;
  cfg.pure_fbm = true;
  cfg.T_max = 2.0;
  TimeGrid grid(2.0, 256);
  auto m = pure_fbm_model(0.0);
  auto a = laplace_mc(m, HurstParam(0.6), {1.0}, 2000, grid, cfg, 99);
  auto b = laplace_mc(m, HurstParam(0.6), {1.0}, 2000, grid, cfg, 99);
  CHECK(a[0].value == b[0].value);
  CHECK(a[0].std_err == b[0].std_err);

  CHECK_THROWS_AS(laplace_mc(m, HurstParam(0.6), {-1.0}, 100, grid, cfg, 1),
                  std::invalid_argument);
  LaplaceConfig bad = cfg;
  bad.bridge_correction = true;
  CHECK_THROWS_AS(laplace_mc(m, HurstParam(0.6), {1.0}, 100, grid, bad, 1),
                  std::invalid_argument);
  TimeGrid short_grid(1.0, 64);
  CHECK_THROWS_AS(laplace_mc(m, HurstParam(0.6), {1.0}, 100, short_grid, cfg, 1),
                  std::invalid_argument);
}

TEST_CASE("Decreusefond-Nualart inequality (light version)") {
  // E exp(-lambda tau_H^{2H}) <= exp(-sqrt(2 lambda)) for H > 1/2, x0 = 0.
  LaplaceConfig cfg;
  cfg.pure_fbm = true;
  cfg.T_max = 20.0;
  HurstParam H(0.75);
  cfg.tau_power = 2.0 * H.value();
  TimeGrid grid(20.0, 2048);
  auto ests =
      laplace_mc(pure_fbm_model(0.0), H, {0.5, 1.0}, 10000, grid, cfg, 31);
  for (const auto& e : ests)
    CHECK(e.value <= std::exp(-std::sqrt(2.0 * e.lambda)) + 3.0 * e.std_err +
                         e.truncation_bound);
}
