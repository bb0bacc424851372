// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "anchorkv/anchor/mask.hpp"
#include "anchorkv/anchor/mhpe.hpp"
#include "anchorkv/model/weights.hpp"

namespace anchorkv::model {

inline constexpr double kLayerNormEps = 1e-5;

/// How one sequence is attended: which keys each query sees on dense and on
/// TAA layers, and the rotary index of every position.
struct AttentionPlan {
  anchor::AttentionMask dense_mask;  // layers outside taa_layers
  anchor::AttentionMask taa_mask;    // taa layers
  /// Rotary index of each token, used for queries everywhere and for keys on
  /// dense layers. Explicit so that a sequence with a position cut out keeps
  /// its original indices.
  std::vector<std::int64_t> positions;
  /// Per-head key indices on taa layers; unset means `positions`.
  std::optional<anchor::MhpePositions> mhpe;

  std::size_t size() const noexcept { return positions.size(); }

  /// Causal masks on every layer and positions 0..n-1.
  static AttentionPlan causal(std::size_t n);
};

/// Residual stream and (optionally) attention weights of one forward pass.
struct ForwardTrace {
  /// r_0 (embeddings) through r_L; r_l is the state after block l.
  std::vector<Matrix> residual;
  /// r^_l: the state after block l's attention, before its MLP.
  std::vector<Matrix> residual_mid;
  /// attention[layer][head] is queries x keys; LAA layers append the anchor
  /// layer's keys as a second block of columns. Empty unless captured.
  std::vector<std::vector<Matrix>> attention;
  Matrix logits;  // n x vocab
};

/// Full-sequence forward pass. Throws LengthError past max_seq, ShapeError when
/// the plan does not match the tokens, NumericError (naming the layer) on a
/// non-finite activation.
ForwardTrace forward(const ModelWeights& weights, std::span<const TokenId> tokens,
                     const AttentionPlan& plan, bool capture = false);

struct TrainingExample {
  std::vector<TokenId> tokens;
  AttentionPlan plan;
  /// Optional weight of the target predicted at each position (size n - 1);
  /// empty weighs every non-anchor target 1. The loss is the weighted mean.
  std::vector<double> target_weights;
};

struct LossAndGrads {
  double loss = 0.0;
  std::size_t targets = 0;
  ModelWeights grads;
};

/// Weighted mean next-token cross-entropy over non-anchor targets and its
/// gradient. InputError when the batch has no target of positive weight.
LossAndGrads loss_and_grads(const ModelWeights& weights, std::span<const TrainingExample> batch);

/// Summed cross-entropy and target count of one sequence, no gradients.
struct SequenceLoss {
  double total = 0.0;
  std::size_t targets = 0;
  std::size_t correct = 0;  // greedy argmax hits
};
SequenceLoss sequence_loss(const ModelWeights& weights, std::span<const TokenId> tokens,
                           const AttentionPlan& plan);

/// Greedy choice over a logits row: the anchor token is never chosen, ties go
/// to the lowest id.
TokenId greedy_token(std::span<const double> logits, TokenId anchor_id);

double gelu(double x) noexcept;

}  // namespace anchorkv::model
