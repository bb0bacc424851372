// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>

#include "anchorkv/anchor/anchored_sequence.hpp"
#include "anchorkv/anchor/mask.hpp"
#include "anchorkv/cache/policy.hpp"
#include "anchorkv/model/attention.hpp"
#include "anchorkv/model/forward.hpp"

namespace anchorkv::anchor {

/// Layer-wise anchor attention for one head: the current layer's keys and
/// values are extended with the anchor layer's (k_anchor/v_anchor, one row
/// per current-layer position), the current mask row is reused for both
/// halves, and a single softmax spans them. Empty anchor matrices reduce to
/// ordinary masked attention. ShapeError when the anchor K/V disagree with
/// each other or with the current layer.
model::HeadAttention laa_attend(const numerics::Matrix& q, const numerics::Matrix& k,
                                const numerics::Matrix& v, const numerics::Matrix& k_anchor,
                                const numerics::Matrix& v_anchor, const AttentionMask& mask,
                                std::size_t d_k);

struct AnchorPlanOptions {
  /// Leading positions kept visible once the first line is compressed; unset
  /// leaves the first segment fully visible. The default matches the Anchor
  /// cache policy so training and decoding see the same keys.
  std::optional<std::size_t> sinks = cache::kDefaultAnchorSinks;
  bool mhpe = true;
  bool literal_slice = false;
};

/// Attention plan for an anchor-planted sequence: causal masks on dense
/// layers, the anchor mask on TAA layers, MHPE key positions when enabled.
model::AttentionPlan make_anchor_plan(const AnchoredSequence& seq, std::size_t n_heads,
                                      const AnchorPlanOptions& options = {});

}  // namespace anchorkv::anchor
