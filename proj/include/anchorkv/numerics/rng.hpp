// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace anchorkv::numerics {

/// xoshiro256** seeded through splitmix64. The integer stream depends only on
/// the seed, so runs reproduce bit-for-bit across platforms; the standard
/// library distributions are avoided because their output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() noexcept;
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal draw (Box-Muller, one cached spare).
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  bool coin() noexcept { return (next_u64() >> 63) != 0; }

  /// Independent generator derived from this one's next output.
  Rng split() noexcept { return Rng(next_u64()); }

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace anchorkv::numerics
