// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "anchorkv/anchor/mask.hpp"
#include "anchorkv/model/forward.hpp"

namespace anchorkv::analysis {

using numerics::Matrix;

/// Attention captured from one forward pass, one n x n matrix per layer and
/// head. LAA layers have their anchor-layer half folded onto the positions it
/// came from, so every row still sums to 1.
struct AttentionRecord {
  std::vector<TokenId> tokens;
  std::vector<std::vector<Matrix>> weights;   // [layer][head]
  std::vector<anchor::AttentionMask> masks;   // [layer]

  std::size_t size() const noexcept { return tokens.size(); }
  std::size_t layers() const noexcept { return weights.size(); }
  std::size_t heads() const noexcept { return weights.empty() ? 0 : weights.front().size(); }
};

/// Runs a capturing forward pass and folds it into a record.
AttentionRecord capture_attention(const model::ModelWeights& weights,
                                  std::span<const TokenId> tokens,
                                  const model::AttentionPlan& plan);

/// Builds a record from an existing captured trace.
AttentionRecord record_from_trace(const model::ModelConfig& config,
                                  std::span<const TokenId> tokens,
                                  const model::AttentionPlan& plan,
                                  const model::ForwardTrace& trace);

}  // namespace anchorkv::analysis
