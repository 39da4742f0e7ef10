#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hurstsense/fbm.hpp"
#include "hurstsense/stats.hpp"

using namespace hurstsense;

TEST_CASE("cholesky sampler: Brownian increments are iid N(0, dt)") {
  TimeGrid grid(1.0, 16);
  CholeskySampler sampler(HurstParam(0.5), grid);
  const long n_paths = 20000;
  double dt = grid.dt();
  double sum = 0.0, sumsq = 0.0, cross = 0.0;
  long m = 0;
  for (long p = 0; p < n_paths; ++p) {
    auto path = sampler.sample(SeedStream{11, static_cast<std::uint64_t>(p)});
    for (int k = 0; k < 16; ++k) {
      double d = path.values[k + 1] - path.values[k];
      sum += d;
      sumsq += d * d;
      if (k > 0) cross += d * (path.values[k] - path.values[k - 1]);
      ++m;
    }
  }
  double mean = sum / m;
  double var = sumsq / m - mean * mean;
  CHECK(std::abs(mean) < 4.0 * std::sqrt(dt / m));
  CHECK(std::abs(var - dt) < 4.0 * dt * std::sqrt(2.0 / m));
  CHECK(std::abs(cross / (m - n_paths)) < 4.0 * dt / std::sqrt(m - n_paths));
}

TEST_CASE("cholesky sampler: node covariance matches R_H") {
  HurstParam H(0.75);
  TimeGrid grid(1.0, 16);
  CholeskySampler sampler(H, grid);
  const long n_paths = 40000;
  int n = grid.n_nodes();
  std::vector<std::vector<double>> vals(n, std::vector<double>(n_paths));
  for (long p = 0; p < n_paths; ++p) {
    auto path = sampler.sample(SeedStream{5, static_cast<std::uint64_t>(p)});
    for (int i = 0; i < n; ++i) vals[i][p] = path.values[i];
  }
  for (int i = 4; i < n; i += 4)
    for (int j = 4; j <= i; j += 4) {
      double acc = 0.0, acc2 = 0.0;
      for (long p = 0; p < n_paths; ++p) {
        double prod = vals[i][p] * vals[j][p];
        acc += prod;
        acc2 += prod * prod;
      }
      double mean = acc / n_paths;
      double se =
          std::sqrt((acc2 / n_paths - mean * mean) / (n_paths - 1.0));
      double target = fbm_covariance(H, grid.node(i), grid.node(j));
      CHECK(std::abs(mean - target) < 4.0 * se);
    }
}

TEST_CASE("samplers are deterministic in the stream") {
  TimeGrid grid(1.0, 32);
  HurstParam H(0.7);
  auto a = cholesky_sample(H, grid, SeedStream{99, 3});
  auto b = cholesky_sample(H, grid, SeedStream{99, 3});
  CHECK(a.values == b.values);
  auto c = circulant_sample(H, grid, SeedStream{99, 3});
  auto d = circulant_sample(H, grid, SeedStream{99, 3});
  CHECK(c.values == d.values);
}

TEST_CASE("circulant sampler: Brownian step variance") {
  TimeGrid grid(1.0, 64);
  CirculantSampler sampler(HurstParam(0.5), grid);
  const long n_paths = 5000;
  double dt = grid.dt();
  double sumsq = 0.0;
  long m = 0;
  for (long p = 0; p < n_paths; ++p) {
    auto path = sampler.sample(SeedStream{21, static_cast<std::uint64_t>(p)});
    for (int k = 0; k < 64; ++k) {
      double d = path.values[k + 1] - path.values[k];
      sumsq += d * d;
      ++m;
    }
  }
  CHECK(std::abs(sumsq / m - dt) < 4.0 * dt * std::sqrt(2.0 / m));
}

TEST_CASE("circulant sampler: fGn lag-1 correlation at H = 0.9") {
  HurstParam H(0.9);
  TimeGrid grid(1.0, 256);
  CirculantSampler sampler(H, grid);
  const long n_paths = 2000;
  double num = 0.0, den = 0.0;
  for (long p = 0; p < n_paths; ++p) {
    auto path = sampler.sample(SeedStream{31, static_cast<std::uint64_t>(p)});
    for (int k = 0; k + 1 < 256; ++k) {
      double d0 = path.values[k + 1] - path.values[k];
      double d1 = path.values[k + 2] - path.values[k + 1];
      num += d0 * d1;
      den += d0 * d0;
    }
  }
  // rho_H(1) = (2^{2H} - 2)/2 evaluated at H = 0.9 (mpmath, 17 digits).
  CHECK(num / den == doctest::Approx(0.74110112659224828).epsilon(0.01));
}

TEST_CASE("circulant sampler: node variances follow t^{2H}") {
  HurstParam H(0.75);
  TimeGrid grid(1.0, 64);
  CirculantSampler sampler(H, grid);
  const long n_paths = 20000;
  std::vector<double> sq(grid.n_nodes(), 0.0);
  for (long p = 0; p < n_paths; ++p) {
    auto path = sampler.sample(SeedStream{41, static_cast<std::uint64_t>(p)});
    for (int i = 0; i < grid.n_nodes(); ++i)
      sq[i] += path.values[i] * path.values[i];
  }
  for (int i : {16, 32, 48, 64}) {
    double var = sq[i] / n_paths;
    double target = std::pow(grid.node(i), 2.0 * H.value());
    CHECK(std::abs(var - target) <
          4.0 * target * std::sqrt(2.0 / n_paths));
  }
}

TEST_CASE("circulant sampler: stationary increment variance") {
  HurstParam H(0.6);
  TimeGrid grid(1.0, 64);
  CirculantSampler sampler(H, grid);
  const long n_paths = 20000;
  double acc = 0.0;
  int i = 8, j = 40; // |t - s| = 0.5
  for (long p = 0; p < n_paths; ++p) {
    auto path = sampler.sample(SeedStream{51, static_cast<std::uint64_t>(p)});
    double d = path.values[j] - path.values[i];
    acc += d * d;
  }
  double target = std::pow(0.5, 2.0 * H.value());
  CHECK(std::abs(acc / n_paths - target) <
        4.0 * target * std::sqrt(2.0 / n_paths));
}

TEST_CASE("circulant and cholesky agree in law (KS at T)") {
  HurstParam H(0.75);
  TimeGrid grid(1.0, 64);
  CirculantSampler circ(H, grid);
  CholeskySampler chol(H, grid);
  const long n_paths = 20000;
  std::vector<double> a(n_paths), b(n_paths);
  for (long p = 0; p < n_paths; ++p) {
    a[p] = circ.sample(SeedStream{61, static_cast<std::uint64_t>(p)})
               .values[64];
    b[p] = chol.sample(SeedStream{62, static_cast<std::uint64_t>(p)})
               .values[64];
  }
  CHECK(ks_two_sample(a, b).p_value > 0.01);
}

TEST_CASE("volterra sampler degenerates to the cumulated sum at H = 1/2") {
  TimeGrid grid(1.0, 128);
  auto inc = brownian_increments(grid, SeedStream{71, 0});
  auto path = volterra_sample(HurstParam(0.5), grid, inc);
  double acc = 0.0;
  for (int k = 0; k < 128; ++k) {
    acc += inc[k];
    CHECK(std::abs(path.values[k + 1] - acc) <= 1e-10);
  }
}

TEST_CASE("volterra sampler: terminal variance and covariance bias") {
  HurstParam H(0.75);
  TimeGrid grid(1.0, 128);
  auto op = kernel_matrix(H, grid);
  const long n_paths = 10000;
  double sumsq = 0.0;
  double cov_half = 0.0;
  for (long p = 0; p < n_paths; ++p) {
    auto inc =
        brownian_increments(grid, SeedStream{81, static_cast<std::uint64_t>(p)});
    auto path = volterra_sample(H, grid, inc, &op);
    sumsq += path.values[128] * path.values[128];
    cov_half += path.values[64] * path.values[128];
  }
  double var = sumsq / n_paths;
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n_paths));
  // Discretization bias of the node covariance is O(dt^{2-2H}) = O(dt^{1/2})
  // here; allow the measured bias plus 4 MC standard errors.
  double target = fbm_covariance(H, 0.5, 1.0);
  double bias_scale = std::pow(grid.dt(), 2.0 - 2.0 * H.value());
  CHECK(std::abs(cov_half / n_paths - target) <
        bias_scale + 4.0 * target * std::sqrt(2.0 / n_paths));
}

TEST_CASE("volterra increments mismatch raises") {
  TimeGrid grid(1.0, 16);
  std::vector<double> inc(15, 0.0);
  CHECK_THROWS_AS(volterra_sample(HurstParam(0.6), grid, inc),
                  std::invalid_argument);
}

TEST_CASE("coupled family: Brownian member, determinism, shrinking gap") {
  TimeGrid grid(1.0, 64);
  CHECK_THROWS_AS(coupled_family({}, grid, SeedStream{1, 0}),
                  std::invalid_argument);

  auto fam = coupled_family({0.5, 0.51, 0.55, 0.6}, grid, SeedStream{91, 4});
  auto fam2 = coupled_family({0.5, 0.51, 0.55, 0.6}, grid, SeedStream{91, 4});
  // H = 1/2 member is exactly the cumulated driving increments.
  double acc = 0.0;
  for (int k = 0; k < 64; ++k) {
    acc += fam.brownian_increments[k];
    CHECK(fam.members[0].second.values[k + 1] == doctest::Approx(acc).epsilon(1e-14));
  }
  for (std::size_t i = 0; i < fam.members.size(); ++i)
    CHECK(fam.members[i].second.values == fam2.members[i].second.values);

  // Sup-norm distance to the Brownian member grows with H (averaged to damp
  // path-to-path noise).
  std::vector<double> dist(3, 0.0);
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    auto f = coupled_family({0.5, 0.51, 0.55, 0.6}, grid,
                            SeedStream{92, static_cast<std::uint64_t>(r)});
    for (int i = 0; i < 3; ++i) {
      double d = 0.0;
      for (int k = 0; k <= 64; ++k)
        d = std::max(d, std::abs(f.members[i + 1].second.values[k] -
                                 f.members[0].second.values[k]));
      dist[i] += d / reps;
    }
  }
  CHECK(dist[0] < dist[1]);
  CHECK(dist[1] < dist[2]);
}

TEST_CASE("blocked volterra application matches the serial reference") {
  HurstParam H(0.7);
  TimeGrid grid(1.0, 96);
  auto op = kernel_matrix(H, grid);
  const int cols = 150; // exercises a partial trailing chunk
  Eigen::MatrixXd inc(96, cols);
  for (int c = 0; c < cols; ++c) {
    auto v = brownian_increments(grid,
                                 SeedStream{101, static_cast<std::uint64_t>(c)});
    for (int k = 0; k < 96; ++k) inc(k, c) = v[k];
  }
  Eigen::MatrixXd a, b;
  volterra_apply_serial(op, inc, a);
  volterra_apply_blocked(op, inc, b);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}
