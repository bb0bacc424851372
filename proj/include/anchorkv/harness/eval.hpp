// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "anchorkv/cache/budget.hpp"
#include "anchorkv/cache/policy.hpp"
#include "anchorkv/harness/corpus.hpp"
#include "anchorkv/model/decode.hpp"

namespace anchorkv::harness {

/// Teacher-forced next-token statistics under a policy. Targets are the real
/// tokens after the first of each sequence; planted anchors are never
/// targets.
struct EvalResult {
  double loss_sum = 0.0;
  std::size_t targets = 0;
  std::size_t correct = 0;
  /// Peak retained positions over real tokens, the worst sequence.
  double peak_budget_percent = 0.0;

  double mean_loss() const;
  double perplexity() const;
  double accuracy() const;
};

/// InputError for an empty corpus or one without any target.
EvalResult evaluate(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                    std::span<const Sequence> corpus, model::DecodeOptions options = {});

double perplexity(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                  std::span<const Sequence> corpus);
double next_token_accuracy(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                           std::span<const Sequence> corpus);

/// Produces an answer token for a needle task.
class Answerer {
 public:
  virtual ~Answerer() = default;
  virtual TokenId answer(const NeedleTask& task) = 0;
};

/// Greedy decoding under a policy; the answer is the first generated token
/// that is neither a space nor a linebreak (within a few tokens).
class ModelAnswerer final : public Answerer {
 public:
  ModelAnswerer(const model::ModelWeights& weights, cache::PolicySpec policy)
      : weights_(weights), policy_(policy) {}
  TokenId answer(const NeedleTask& task) override;

 private:
  const model::ModelWeights& weights_;
  cache::PolicySpec policy_;
};

class OracleAnswerer final : public Answerer {
 public:
  TokenId answer(const NeedleTask& task) override { return task.answer_token(); }
};

class CoinFlipAnswerer final : public Answerer {
 public:
  explicit CoinFlipAnswerer(std::uint64_t seed) : rng_(seed) {}
  TokenId answer(const NeedleTask& task) override;

 private:
  numerics::Rng rng_;
};

struct NeedleGrid {
  std::vector<std::size_t> lengths;
  std::vector<double> depths;
  std::size_t trials = 0;
  std::vector<std::vector<double>> accuracy;  // [length][depth]
  /// Tokens from the needle's list entry to the end of the prompt, per cell.
  std::vector<std::vector<std::size_t>> needle_distance;

  std::string to_csv() const;  // length,depth,accuracy,needle_distance
};

/// Trial t of every cell places the needle when t is even and asks the "in"
/// variant when t mod 4 < 2, so every four trials cover each combination.
/// InputError for trials == 0 or empty axes.
NeedleGrid eval_needle_grid(Answerer& answerer, std::span<const std::size_t> lengths,
                            std::span<const double> depths, std::size_t trials,
                            std::uint64_t seed);
NeedleGrid eval_needle_grid(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                            std::span<const std::size_t> lengths, std::span<const double> depths,
                            std::size_t trials, std::uint64_t seed);

}  // namespace anchorkv::harness
