// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/analysis/record.hpp"

#include "anchorkv/errors.hpp"

namespace anchorkv::analysis {

AttentionRecord record_from_trace(const model::ModelConfig& config,
                                  std::span<const TokenId> tokens,
                                  const model::AttentionPlan& plan,
                                  const model::ForwardTrace& trace) {
  const std::size_t n = tokens.size();
  if (trace.attention.size() != config.n_layers)
    throw InputError("trace was not captured (" + std::to_string(trace.attention.size()) +
                     " attention layers)");
  AttentionRecord rec;
  rec.tokens.assign(tokens.begin(), tokens.end());
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    rec.masks.push_back(config.is_taa_layer(l) ? plan.taa_mask : plan.dense_mask);
    std::vector<Matrix> heads;
    for (const Matrix& w : trace.attention[l]) {
      if (w.rows() != n || (w.cols() != n && w.cols() != 2 * n))
        throw ShapeError("captured attention has an unexpected shape");
      if (w.cols() == n) {
        heads.push_back(w);
        continue;
      }
      Matrix folded(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) folded(i, j) = w(i, j) + w(i, n + j);
      heads.push_back(std::move(folded));
    }
    rec.weights.push_back(std::move(heads));
  }
  return rec;
}

AttentionRecord capture_attention(const model::ModelWeights& weights,
                                  std::span<const TokenId> tokens,
                                  const model::AttentionPlan& plan) {
  const auto trace = model::forward(weights, tokens, plan, true);
  return record_from_trace(weights.config, tokens, plan, trace);
}

}  // namespace anchorkv::analysis
