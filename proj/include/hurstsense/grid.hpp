#pragma once

#include <cstdint>
#include <stdexcept>

namespace hurstsense {

/// Hurst parameter restricted to [1/2, 1).
class HurstParam {
public:
  explicit HurstParam(double value) : value_(value) {
    if (!(value >= 0.5 && value < 1.0))
      throw std::domain_error("HurstParam: value must lie in [0.5, 1)");
  }
  double value() const { return value_; }
  bool is_brownian() const { return value_ == 0.5; }

private:
  double value_;
};

/// Uniform discretization of [0, T] with nodes t_k = k*T/n_steps.
struct TimeGrid {
  TimeGrid(double horizon, int n_steps) : horizon(horizon), n_steps(n_steps) {
    if (!(horizon > 0.0))
      throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (n_steps < 1)
      throw std::invalid_argument("TimeGrid: n_steps must be positive");
  }
  double dt() const { return horizon / n_steps; }
  double node(int k) const { return k * horizon / n_steps; }
  int n_nodes() const { return n_steps + 1; }

  double horizon;
  int n_steps;
};

/// Identifies one reproducible random stream: the variate sequence is a pure
/// function of (master_seed, path_index), independent of threading.
struct SeedStream {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

} // namespace hurstsense
