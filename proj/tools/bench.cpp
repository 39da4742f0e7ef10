#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hurstsense/fbm.hpp"
#include "hurstsense/hitting.hpp"
#include "hurstsense/kernels.hpp"

using namespace hurstsense;

namespace {

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double timed(const char* name, F&& f, int reps = 1) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = now();
    f();
    best = std::min(best, now() - t0);
  }
  std::printf("%-38s %10.3f ms\n", name, best * 1e3);
  return best;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial-vs-parallel microbenchmarks"};
  int n = 1024;
  int cols = 512;
  double h = 0.7;
  app.add_option("--n", n, "time steps");
  app.add_option("--cols", cols, "path columns per apply");
  app.add_option("--H", h, "Hurst parameter");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads=%d  n=%d  cols=%d  H=%g\n\n", omp_get_max_threads(), n,
              cols, h);

  TimeGrid grid(1.0, n);
  HurstParam H(h);

  DiscreteOperator op = kernel_matrix(H, grid);
  timed("kernel_matrix assembly", [&] { kernel_matrix(H, grid); });

  Eigen::MatrixXd inc(n, cols), out_serial, out_blocked;
  for (int c = 0; c < cols; ++c) {
    auto v = brownian_increments(grid,
                                 SeedStream{7, static_cast<std::uint64_t>(c)});
    for (int k = 0; k < n; ++k) inc(k, c) = v[k];
  }
  double flops = 0.5 * static_cast<double>(n) * n * cols * 2.0;
  double ts = timed("volterra apply, serial reference",
                    [&] { volterra_apply_serial(op, inc, out_serial); }, 3);
  double tb = timed("volterra apply, blocked OpenMP",
                    [&] { volterra_apply_blocked(op, inc, out_blocked); }, 3);
  double dev = (out_serial - out_blocked).cwiseAbs().maxCoeff();
  std::printf("  serial  %7.2f GFLOP/s\n", flops / ts / 1e9);
  std::printf("  blocked %7.2f GFLOP/s  (speedup %.2fx, max dev %.2e)\n\n",
              flops / tb / 1e9, ts / tb, dev);

  CirculantSampler circulant(H, grid);
  timed("circulant sample (per path)",
        [&] {
          for (int p = 0; p < 64; ++p)
            circulant.sample(SeedStream{11, static_cast<std::uint64_t>(p)});
        },
        3);

  LaplaceConfig cfg;
  cfg.pure_fbm = true;
  cfg.T_max = 1.0;
  auto model = pure_fbm_model(0.0);
  timed("laplace_mc, 2000 paths", [&] {
    laplace_mc(model, H, {1.0}, 2000, grid, cfg, 13);
  });
  return 0;
}
