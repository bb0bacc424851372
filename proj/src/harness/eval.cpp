// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/harness/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "anchorkv/errors.hpp"
#include "anchorkv/harness/vocab.hpp"
#include "anchorkv/model/forward.hpp"

namespace anchorkv::harness {

namespace {

double cross_entropy(std::span<const double> logits, TokenId target) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - peak);
  return peak + std::log(total) - logits[static_cast<std::size_t>(target)];
}

}  // namespace

double EvalResult::mean_loss() const {
  if (targets == 0) throw InputError("no evaluation targets");
  return loss_sum / static_cast<double>(targets);
}

double EvalResult::perplexity() const { return std::exp(mean_loss()); }

double EvalResult::accuracy() const {
  if (targets == 0) throw InputError("no evaluation targets");
  return static_cast<double>(correct) / static_cast<double>(targets);
}

EvalResult evaluate(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                    std::span<const Sequence> corpus, model::DecodeOptions options) {
  if (corpus.empty()) throw InputError("evaluate: empty corpus");
  const TokenId anchor_id = weights.config.anchor_token_id;
  EvalResult out;
  for (const auto& seq : corpus) {
    if (seq.size() < 2) continue;
    model::DecodeSession session(weights, policy, options);
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const auto l = session.feed(seq[i]);
      const TokenId target = seq[i + 1];
      out.loss_sum += cross_entropy(l, target);
      out.correct += model::greedy_token(l, anchor_id) == target;
      ++out.targets;
    }
    out.peak_budget_percent = std::max(out.peak_budget_percent, session.budget().budget_percent);
  }
  if (out.targets == 0) throw InputError("evaluate: corpus has no prediction targets");
  return out;
}

double perplexity(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                  std::span<const Sequence> corpus) {
  return evaluate(weights, policy, corpus).perplexity();
}

double next_token_accuracy(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                           std::span<const Sequence> corpus) {
  return evaluate(weights, policy, corpus).accuracy();
}

TokenId ModelAnswerer::answer(const NeedleTask& task) {
  constexpr std::size_t kMaxTries = 4;
  model::DecodeSession session(weights_, policy_);
  auto logits = session.prefill(task.prompt);
  for (std::size_t i = 0; i < kMaxTries; ++i) {
    const TokenId t = model::greedy_token(logits, weights_.config.anchor_token_id);
    if (t != Vocabulary::kLinebreak && t != Vocabulary::id_of(' ')) return t;
    if (session.position() + 2 > weights_.config.max_seq) return t;
    logits = session.feed(t);
  }
  return model::greedy_token(logits, weights_.config.anchor_token_id);
}

TokenId CoinFlipAnswerer::answer(const NeedleTask&) {
  return Vocabulary::id_of(rng_.coin() ? kAnswerTrue : kAnswerFalse);
}

std::string NeedleGrid::to_csv() const {
  std::ostringstream out;
  out << "length,depth,accuracy,needle_distance\n";
  for (std::size_t a = 0; a < lengths.size(); ++a)
    for (std::size_t b = 0; b < depths.size(); ++b)
      out << lengths[a] << ',' << depths[b] << ',' << accuracy[a][b] << ','
          << needle_distance[a][b] << '\n';
  return out.str();
}

NeedleGrid eval_needle_grid(Answerer& answerer, std::span<const std::size_t> lengths,
                            std::span<const double> depths, std::size_t trials,
                            std::uint64_t seed) {
  if (trials == 0) throw InputError("needle grid: trials must be at least 1");
  if (lengths.empty() || depths.empty()) throw InputError("needle grid: empty axis");
  NeedleGrid grid;
  grid.lengths.assign(lengths.begin(), lengths.end());
  grid.depths.assign(depths.begin(), depths.end());
  grid.trials = trials;
  grid.accuracy.assign(lengths.size(), std::vector<double>(depths.size(), 0.0));
  grid.needle_distance.assign(lengths.size(), std::vector<std::size_t>(depths.size(), 0));
  numerics::Rng rng(seed);
  for (std::size_t a = 0; a < lengths.size(); ++a) {
    for (std::size_t b = 0; b < depths.size(); ++b) {
      std::size_t hits = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        const NeedleTask task =
            make_needle(rng, lengths[a], depths[b], t % 2 == 0,
                        t % 4 < 2 ? NeedleVariant::kIn : NeedleVariant::kNotIn);
        grid.needle_distance[a][b] = task.prompt.size() - task.needle_position;
        hits += answerer.answer(task) == task.answer_token();
      }
      grid.accuracy[a][b] = static_cast<double>(hits) / static_cast<double>(trials);
    }
  }
  return grid;
}

NeedleGrid eval_needle_grid(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                            std::span<const std::size_t> lengths, std::span<const double> depths,
                            std::size_t trials, std::uint64_t seed) {
  ModelAnswerer answerer(weights, policy);
  return eval_needle_grid(answerer, lengths, depths, trials, seed);
}

}  // namespace anchorkv::harness
