// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace anchorkv::model {

/// Rotary position embedding for one head vector of even width d_k. Pair
/// (x[2t], x[2t+1]) is rotated by position * base^(-2t/d_k), t = 0..d_k/2-1.
/// Throws ConfigError for odd widths.
std::vector<double> apply_rope(std::span<const double> x, std::int64_t position, double base);

/// In-place form; a negative position applies the inverse rotation.
void apply_rope_inplace(std::span<double> x, std::int64_t position, double base);

/// Frequencies base^(-2t/d_k) for a head width, cached per (width, base).
class RotaryFrequencies {
 public:
  RotaryFrequencies(std::size_t head_dim, double base);
  void rotate(std::span<double> x, std::int64_t position) const;
  std::size_t head_dim() const noexcept { return inv_freq_.size() * 2; }

 private:
  std::vector<double> inv_freq_;
};

}  // namespace anchorkv::model
