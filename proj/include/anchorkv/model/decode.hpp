// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "anchorkv/cache/budget.hpp"
#include "anchorkv/cache/policy.hpp"
#include "anchorkv/model/weights.hpp"

namespace anchorkv::model {

struct DecodeOptions {
  /// Rotate anchor keys on TAA layers by their per-head span positions.
  bool use_mhpe = true;
};

/// Incremental decoder over one sequence. Keys and values are cached per layer
/// and head and physically compacted to the policy's retained set after every
/// step. The Anchor policy governs TAA layers only (dense layers keep every
/// position); all other policies govern every layer.
///
/// Under a policy that plants anchors, feeding a linebreak also feeds an
/// anchor token right after it, and the anchor's logits are the ones that
/// predict the next real token.
class DecodeSession {
 public:
  DecodeSession(const ModelWeights& weights, cache::PolicySpec policy, DecodeOptions options = {});

  /// Feeds one real token and returns the logits predicting the next one.
  /// LengthError once max_seq positions are used; InputError for the anchor
  /// token under an anchor-planting policy.
  std::span<const double> feed(TokenId token);

  /// Feeds a prompt; logits are only computed for its last position.
  std::span<const double> prefill(std::span<const TokenId> tokens);

  std::span<const double> logits() const noexcept { return logits_; }

  /// Positions processed so far, planted anchors included.
  std::size_t position() const noexcept { return stream_.size(); }
  /// The processed stream, planted anchors included.
  const std::vector<TokenId>& stream() const noexcept { return stream_; }
  std::size_t real_tokens() const noexcept { return real_tokens_; }

  /// Cached positions of one layer, ascending.
  const std::vector<std::size_t>& cached_positions(std::size_t layer) const;
  /// Retained count of the governing policy after each processed position.
  const std::vector<std::size_t>& retained_trace() const noexcept { return retained_trace_; }
  /// KV rows currently held summed over layers.
  std::size_t cache_entries() const;
  /// Policy retention measured against the real (non-anchor) tokens seen.
  cache::BudgetReport budget(std::size_t bytes_per_float = 8) const;

  const cache::KvCachePolicy& policy() const noexcept { return policy_; }
  bool governs(std::size_t layer) const;

 private:
  struct LayerCache {
    std::vector<std::size_t> positions;
    std::vector<Matrix> keys;    // per head, rotated
    std::vector<Matrix> values;  // per head
  };

  void step(TokenId token, bool want_logits);
  void compact(LayerCache& cache, const std::vector<std::size_t>& keep) const;

  const ModelWeights& weights_;
  cache::KvCachePolicy policy_;
  DecodeOptions options_;
  std::vector<LayerCache> layers_;
  std::vector<TokenId> stream_;
  std::vector<std::size_t> anchors_;
  std::vector<std::size_t> retained_trace_;
  std::vector<double> feedback_;
  std::vector<double> logits_;
  std::size_t real_tokens_ = 0;
};

/// Greedy decoding of `max_new` tokens after `prompt` under a policy. Returns
/// the prompt followed by the new tokens, planted anchors removed. Generation
/// stops early when the context reaches max_seq. LengthError if the prompt
/// alone does not fit.
std::vector<TokenId> generate(const ModelWeights& weights, std::span<const TokenId> prompt,
                              std::size_t max_new, const cache::PolicySpec& policy,
                              DecodeOptions options = {});

}  // namespace anchorkv::model
