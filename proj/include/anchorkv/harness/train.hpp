// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "anchorkv/anchor/laa.hpp"
#include "anchorkv/harness/corpus.hpp"
#include "anchorkv/model/forward.hpp"
#include "anchorkv/model/optimizer.hpp"

namespace anchorkv::harness {

struct TrainOptions {
  std::size_t steps = 200;
  std::size_t batch_size = 8;
  double lr = 3e-3;
  std::size_t warmup = 20;
  double min_lr_ratio = 0.1;  // cosine floor
  double clip = 1.0;
  model::AdamOptions adam;
  /// Plant anchors and train with the anchor attention plan.
  bool anchored = false;
  anchor::AnchorPlanOptions plan;
  /// Optional per-target weights for a (planted) sequence.
  std::function<std::vector<double>(std::span<const TokenId>)> target_weights;
  std::uint64_t seed = 0;
  /// Called after every step with (step, loss).
  std::function<void(std::size_t, double)> on_step;
};

struct TrainReport {
  std::vector<double> losses;
};

/// Linear warm-up then cosine decay to min_lr_ratio * lr.
double learning_rate(const TrainOptions& options, std::size_t step);

/// Builds the training example of one corpus sequence: planted with the
/// anchor plan when `anchored`, causal otherwise.
model::TrainingExample make_example(const model::ModelConfig& config, const Sequence& seq,
                                    const TrainOptions& options);

/// AdamW training on batches drawn uniformly (seeded) from `corpus`.
TrainReport train(model::ModelWeights& weights, std::span<const Sequence> corpus,
                  const TrainOptions& options);

/// One stage of membership training on lists of 2..max_list entries.
struct CurriculumStage {
  std::size_t max_list = 128;
  std::size_t steps = 0;
  std::size_t batch_size = 16;
  double min_lr_ratio = 0.1;
};

/// Short lists at a constant rate, then longer ones. The anchor route
/// (entry -> its anchor -> the answer) is found reliably only on lists of a
/// few entries; it then carries over to long lists.
std::vector<CurriculumStage> default_membership_curriculum();

/// Trains through `stages` in order, each on a fresh membership corpus of
/// `corpus_tokens` tokens seeded from `base.seed`. Only the answer after each
/// assert stub is a target. `base.steps`, `batch_size`, `min_lr_ratio` and
/// `target_weights` are overridden per stage; `on_step` sees a running step.
TrainReport train_membership(model::ModelWeights& weights, std::span<const CurriculumStage> stages,
                             const TrainOptions& base, std::size_t corpus_tokens = 400000);

}  // namespace anchorkv::harness
