#pragma once

#include <cmath>
#include <cstdint>

#include "hurstsense/grid.hpp"

namespace hurstsense {

// Philox4x32-10 counter-based generator (Salmon et al. 2011).
// Counter layout: (draw, draw>>32, path_lo, path_hi), key = master_seed.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  struct Block {
    std::uint32_t v[4];
  };

  static Block generate(std::uint64_t key, std::uint64_t ctr_lo,
                        std::uint64_t ctr_hi) {
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
      std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
      std::uint32_t h0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t l0 = static_cast<std::uint32_t>(p0);
      std::uint32_t h1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t l1 = static_cast<std::uint32_t>(p1);
      std::uint32_t n0 = h1 ^ c1 ^ k0;
      std::uint32_t n2 = h0 ^ c3 ^ k1;
      c0 = n0;
      c1 = l1;
      c2 = n2;
      c3 = l0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return Block{{c0, c1, c2, c3}};
  }
};

/// Deterministic stream of N(0,1) variates and U(0,1) uniforms keyed by
/// (master_seed, path_index). Each Philox block yields one Box-Muller pair;
/// uniforms consume a block of their own so interleaving normals and
/// uniforms stays a pure function of the consumption order.
class NormalStream {
public:
  explicit NormalStream(SeedStream s) : seed_(s) {}

  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    auto b = block();
    double u1 = to_unit(b.v[0], b.v[1]);
    double u2 = to_unit(b.v[2], b.v[3]);
    double r = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = r * std::sin(angle);
    have_spare_ = true;
    return r * std::cos(angle);
  }

  double next_uniform() {
    auto b = block();
    return to_unit(b.v[0], b.v[1]);
  }

private:
  Philox4x32::Block block() {
    return Philox4x32::generate(seed_.master_seed, counter_++,
                                seed_.path_index);
  }
  // 53-bit uniform in (0,1), never exactly 0 or 1.
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    std::uint64_t bits =
        ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) / 9007199254740992.0;
  }

  SeedStream seed_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace hurstsense
