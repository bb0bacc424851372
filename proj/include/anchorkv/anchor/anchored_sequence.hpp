// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "anchorkv/model/config.hpp"

namespace anchorkv::anchor {

/// Open interval (segment_start, anchor_pos) of the positions an anchor
/// compresses. segment_start is the previous anchor, or -1 for the first one.
struct AnchorSpan {
  std::int64_t segment_start = -1;
  std::int64_t anchor_pos = 0;

  std::int64_t length() const noexcept { return anchor_pos - segment_start - 1; }
  friend bool operator==(const AnchorSpan&, const AnchorSpan&) = default;
};

/// Token sequence with an anchor planted after every linebreak. Positions are
/// 0-based throughout.
struct AnchoredSequence {
  std::vector<TokenId> tokens;
  std::vector<std::size_t> anchors;  // strictly increasing
  std::vector<AnchorSpan> spans;     // one per anchor

  std::size_t size() const noexcept { return tokens.size(); }
};

/// Inserts `anchor_id` immediately after every `linebreak_id`. Throws
/// ContaminationError if the input already contains the anchor token.
AnchoredSequence plant_anchors(std::span<const TokenId> tokens, TokenId linebreak_id,
                               TokenId anchor_id);

/// Indexes a sequence whose anchors are already in place (e.g. a decoded
/// stream). Every anchor must directly follow a linebreak.
AnchoredSequence index_anchors(std::span<const TokenId> planted, TokenId linebreak_id,
                               TokenId anchor_id);

/// Removes planted anchors, recovering the original token stream.
std::vector<TokenId> strip_anchors(std::span<const TokenId> planted, TokenId anchor_id);

}  // namespace anchorkv::anchor
