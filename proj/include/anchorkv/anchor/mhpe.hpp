// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "anchorkv/anchor/anchored_sequence.hpp"
#include "anchorkv/numerics/matrix.hpp"

namespace anchorkv::anchor {

/// Per-position, per-head rotary index for keys. Ordinary positions carry
/// their own index in every head; an anchor spreads its heads over the
/// positions it compresses.
class MhpePositions {
 public:
  MhpePositions() = default;
  MhpePositions(std::size_t n, std::size_t n_heads);

  std::size_t size() const noexcept { return n_; }
  std::size_t n_heads() const noexcept { return heads_; }
  std::int64_t at(std::size_t pos, std::size_t head) const noexcept {
    return data_[pos * heads_ + head];
  }
  std::int64_t& at(std::size_t pos, std::size_t head) noexcept { return data_[pos * heads_ + head]; }
  std::span<const std::int64_t> heads_of(std::size_t pos) const noexcept {
    return {data_.data() + pos * heads_, heads_};
  }

  friend bool operator==(const MhpePositions&, const MhpePositions&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t heads_ = 0;
  std::vector<std::int64_t> data_;
};

/// Head positions for one anchor span. A span of m compressed positions maps
/// head h to start+1+(h mod m) when m <= n_heads, otherwise to
/// round(start+1 + h(m-1)/(n_heads-1)). An empty span yields the anchor's own
/// position in every head.
std::vector<std::int64_t> span_head_positions(const AnchorSpan& span, std::size_t n_heads);

/// Throws InputError when n_heads is zero.
MhpePositions assign_mhpe_positions(const AnchoredSequence& seq, std::size_t n_heads);

/// Rotates head h of `k_heads` (one row of n_heads * d_k values) by its own
/// position. ShapeError when the head counts disagree.
std::vector<double> mhpe_rotate_keys(std::span<const double> k_heads,
                                     std::span<const std::int64_t> positions, double base);

}  // namespace anchorkv::anchor
