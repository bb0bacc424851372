// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anchorkv/numerics/matrix.hpp"

namespace anchorkv::anchor {

/// n x n additive attention bias with entries in {0, -1e9}. Row i is the query,
/// column j the key.
class AttentionMask {
 public:
  /// Everything visible (no causal constraint).
  explicit AttentionMask(std::size_t n = 0);

  static AttentionMask causal(std::size_t n);

  std::size_t size() const noexcept { return bias_.rows(); }
  bool visible(std::size_t row, std::size_t col) const noexcept { return bias_(row, col) == 0.0; }
  void hide(std::size_t row, std::size_t col) noexcept;
  void show(std::size_t row, std::size_t col) noexcept { bias_(row, col) = 0.0; }
  /// Hides column `col` for every query row.
  void hide_column(std::size_t col) noexcept;

  const numerics::Matrix& bias() const noexcept { return bias_; }
  std::vector<std::size_t> visible_columns(std::size_t row) const;

  /// 0/1 visibility grid, row-major, preceded by an "n,anchors" header line
  /// and a line carrying n and the space-separated anchor list.
  std::string to_csv(std::span<const std::size_t> anchors) const;

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  numerics::Matrix bias_;
};

struct AnchorMaskOptions {
  /// Mask the half-open slice [I[j], I[j+1]) as the pseudocode literally
  /// reads, hiding the earlier anchor. Off by default: the open interval keeps
  /// both anchors visible.
  bool literal_slice = false;
  /// When set, the first segment (before the first anchor) is also
  /// compressed once that anchor is complete, except for its leading `sinks`
  /// positions. Unset reproduces the plain algorithm, which never masks the
  /// first segment.
  std::optional<std::size_t> sinks;
};

/// Token-wise anchor attention mask: autoregressive part plus, for every
/// consecutive anchor pair (I[j], I[j+1]) with I[j+1] < i, the positions
/// between them hidden from row i. `anchors` must be strictly increasing and
/// below n (InputError otherwise).
AttentionMask build_anchor_mask(std::size_t n, std::span<const std::size_t> anchors,
                                const AnchorMaskOptions& options = {});

}  // namespace anchorkv::anchor
