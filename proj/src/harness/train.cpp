// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/harness/train.hpp"

#include <cmath>
#include <numbers>

#include "anchorkv/anchor/anchored_sequence.hpp"
#include "anchorkv/errors.hpp"
#include "anchorkv/harness/vocab.hpp"
#include "anchorkv/model/optimizer.hpp"

namespace anchorkv::harness {

double learning_rate(const TrainOptions& options, std::size_t step) {
  if (step < options.warmup)
    return options.lr * static_cast<double>(step + 1) / static_cast<double>(options.warmup);
  const std::size_t span = options.steps > options.warmup ? options.steps - options.warmup : 1;
  const double progress =
      std::min(1.0, static_cast<double>(step - options.warmup) / static_cast<double>(span));
  const double floor = options.min_lr_ratio;
  return options.lr * (floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

model::TrainingExample make_example(const model::ModelConfig& config, const Sequence& seq,
                                    const TrainOptions& options) {
  model::TrainingExample ex;
  if (options.anchored) {
    auto planted = anchor::plant_anchors(seq, Vocabulary::kLinebreak, config.anchor_token_id);
    ex.plan = anchor::make_anchor_plan(planted, config.n_heads, options.plan);
    ex.tokens = std::move(planted.tokens);
  } else {
    ex.tokens = seq;
    ex.plan = model::AttentionPlan::causal(seq.size());
  }
  if (ex.tokens.size() > config.max_seq)
    throw LengthError("training sequence of " + std::to_string(ex.tokens.size()) +
                      " positions exceeds max_seq");
  if (options.target_weights) ex.target_weights = options.target_weights(ex.tokens);
  return ex;
}

TrainReport train(model::ModelWeights& weights, std::span<const Sequence> corpus,
                  const TrainOptions& options) {
  if (corpus.empty()) throw InputError("train: empty corpus");
  if (options.batch_size == 0) throw InputError("train: batch size must be positive");
  numerics::Rng rng(options.seed);
  auto state = model::AdamState::for_weights(weights, options.adam);
  TrainReport report;
  std::vector<model::TrainingExample> batch(options.batch_size);
  for (std::size_t step = 0; step < options.steps; ++step) {
    for (auto& ex : batch) ex = make_example(weights.config, corpus[rng.below(corpus.size())], options);
    auto lg = model::loss_and_grads(weights, batch);
    if (options.clip > 0.0) model::clip_grad_norm(lg.grads, options.clip);
    model::train_step(weights, lg.grads, state, learning_rate(options, step));
    report.losses.push_back(lg.loss);
    if (options.on_step) options.on_step(step, lg.loss);
  }
  return report;
}

std::vector<CurriculumStage> default_membership_curriculum() {
  return {{4, 800, 32, 1.0}, {16, 400, 16, 0.1}, {128, 400, 16, 0.1}};
}

TrainReport train_membership(model::ModelWeights& weights, std::span<const CurriculumStage> stages,
                             const TrainOptions& base, std::size_t corpus_tokens) {
  if (stages.empty()) throw InputError("train_membership: no stages");
  TrainReport report;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const CurriculumStage& stage = stages[i];
    numerics::Rng rng(base.seed + 7919 * (i + 1));
    CorpusOptions corpus_options;
    corpus_options.min_list = 2;
    corpus_options.max_list = stage.max_list;
    const auto corpus = make_corpus(rng, corpus_tokens, CorpusStyle::kMembership, corpus_options);
    TrainOptions options = base;
    options.steps = stage.steps;
    options.batch_size = stage.batch_size;
    options.min_lr_ratio = stage.min_lr_ratio;
    options.seed = base.seed + i;
    options.target_weights = [](std::span<const TokenId> t) {
      return membership_target_weights(t);
    };
    if (base.on_step)
      options.on_step = [&](std::size_t step, double loss) { base.on_step(offset + step, loss); };
    auto part = train(weights, corpus, options);
    report.losses.insert(report.losses.end(), part.losses.begin(), part.losses.end());
    offset += stage.steps;
  }
  return report;
}

}  // namespace anchorkv::harness
