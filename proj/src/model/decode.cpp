// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/model/decode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anchorkv/anchor/mhpe.hpp"
#include "anchorkv/errors.hpp"
#include "anchorkv/model/attention.hpp"
#include "anchorkv/model/forward.hpp"
#include "anchorkv/model/rope.hpp"
#include "internal.hpp"

namespace anchorkv::model {

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& src_positions,
                   const std::vector<std::size_t>& wanted) {
  Matrix out(wanted.size(), src.cols());
  for (std::size_t r = 0; r < wanted.size(); ++r) {
    const auto it = std::lower_bound(src_positions.begin(), src_positions.end(), wanted[r]);
    if (it == src_positions.end() || *it != wanted[r])
      throw ShapeError("anchor layer cache lacks position " + std::to_string(wanted[r]));
    const auto row = src.row(static_cast<std::size_t>(it - src_positions.begin()));
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

DecodeSession::DecodeSession(const ModelWeights& weights, cache::PolicySpec policy,
                             DecodeOptions options)
    : weights_(weights), policy_(policy), options_(options) {
  weights_.config.validate();
  if (policy.plants_anchors() && policy.anchor_id != weights.config.anchor_token_id)
    throw ConfigError("anchor policy token " + std::to_string(policy.anchor_id) +
                      " differs from the model's anchor_token_id");
  layers_.resize(weights.config.n_layers);
  for (auto& layer : layers_) {
    layer.keys.resize(weights.config.n_heads);
    layer.values.resize(weights.config.n_heads);
  }
}

bool DecodeSession::governs(std::size_t layer) const {
  if (policy_.spec().kind == cache::PolicyKind::kAnchor)
    return weights_.config.is_taa_layer(layer);
  return true;
}

const std::vector<std::size_t>& DecodeSession::cached_positions(std::size_t layer) const {
  return layers_.at(layer).positions;
}

std::size_t DecodeSession::cache_entries() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.positions.size();
  return n;
}

cache::BudgetReport DecodeSession::budget(std::size_t bytes_per_float) const {
  const auto& cfg = weights_.config;
  auto report = cache::budget_of(retained_trace_, std::max<std::size_t>(real_tokens_, 1),
                                 {cfg.n_layers, cfg.d_model, bytes_per_float, 1});
  report.policy = policy_.spec().to_string();
  return report;
}

std::span<const double> DecodeSession::feed(TokenId token) {
  const auto& spec = policy_.spec();
  if (spec.plants_anchors() && token == spec.anchor_id)
    throw InputError("anchor tokens are planted by the session, not fed");
  const bool plant = spec.plants_anchors() && token == spec.linebreak_id;
  step(token, !plant);
  ++real_tokens_;
  if (plant) step(spec.anchor_id, true);
  return logits_;
}

std::span<const double> DecodeSession::prefill(std::span<const TokenId> tokens) {
  const auto& spec = policy_.spec();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const TokenId t = tokens[i];
    if (spec.plants_anchors() && t == spec.anchor_id)
      throw InputError("anchor tokens are planted by the session, not fed");
    const bool last = i + 1 == tokens.size();
    const bool plant = spec.plants_anchors() && t == spec.linebreak_id;
    step(t, last && !plant);
    ++real_tokens_;
    if (plant) step(spec.anchor_id, last);
  }
  return logits_;
}

void DecodeSession::compact(LayerCache& cache, const std::vector<std::size_t>& keep) const {
  if (cache.positions == keep) return;
  std::vector<std::size_t> rows;
  rows.reserve(keep.size());
  std::size_t j = 0;
  for (std::size_t r = 0; r < cache.positions.size() && j < keep.size(); ++r) {
    if (cache.positions[r] == keep[j]) {
      rows.push_back(r);
      ++j;
    }
  }
  if (j != keep.size()) throw ShapeError("policy retained a position that is not cached");
  for (auto& k : cache.keys) k.keep_rows(rows);
  for (auto& v : cache.values) v.keep_rows(rows);
  cache.positions = keep;
}

void DecodeSession::step(TokenId token, bool want_logits) {
  const auto& cfg = weights_.config;
  const std::size_t pos = stream_.size();
  if (pos >= cfg.max_seq)
    throw LengthError("context reached max_seq " + std::to_string(cfg.max_seq));
  if (token < 0 || static_cast<std::size_t>(token) >= cfg.vocab_size)
    throw InputError("token id " + std::to_string(token) + " outside vocabulary");

  const std::size_t d = cfg.d_model;
  const std::size_t dk = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const RotaryFrequencies freqs(dk, cfg.rope_base);
  const auto ipos = static_cast<std::int64_t>(pos);

  const bool is_anchor = policy_.spec().plants_anchors() && token == policy_.spec().anchor_id;
  std::vector<std::int64_t> anchor_heads;
  if (is_anchor) {
    const std::int64_t start = anchors_.empty() ? -1 : static_cast<std::int64_t>(anchors_.back());
    anchor_heads = anchor::span_head_positions({start, ipos}, cfg.n_heads);
    anchors_.push_back(pos);
  }

  std::optional<std::span<const double>> feedback;
  if (policy_.spec().needs_feedback() && pos > 0) feedback = std::span<const double>(feedback_);
  const std::vector<std::size_t> retained = policy_.visible(pos, token, feedback);
  stream_.push_back(token);
  retained_trace_.push_back(retained.size());
  std::vector<double> next_feedback(policy_.spec().needs_feedback() ? retained.size() : 0, 0.0);

  Matrix x(1, d);
  {
    const auto src = weights_.embedding.row(static_cast<std::size_t>(token));
    std::copy(src.begin(), src.end(), x.row(0).begin());
  }

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const LayerWeights& lw = weights_.layers[l];
    LayerCache& cache = layers_[l];
    const bool mhpe_here = is_anchor && options_.use_mhpe && cfg.is_taa_layer(l);

    const Matrix h1 = detail::layer_norm_rows(x, lw.ln1_gain, nullptr);
    const Matrix q_all = numerics::matmul(h1, lw.wq);
    const Matrix k_all = numerics::matmul(h1, lw.wk);
    const Matrix v_all = numerics::matmul(h1, lw.wv);

    cache.positions.push_back(pos);
    std::vector<Matrix> queries(cfg.n_heads);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      queries[h] = q_all.col_block(h * dk, dk);
      freqs.rotate(queries[h].row(0), ipos);
      Matrix k = k_all.col_block(h * dk, dk);
      freqs.rotate(k.row(0), mhpe_here ? anchor_heads[h] : ipos);
      cache.keys[h].append_row(k.row(0));
      cache.values[h].append_row(v_all.col_block(h * dk, dk).row(0));
    }
    if (governs(l)) compact(cache, retained);

    const LayerCache* anchor_cache = nullptr;
    if (cfg.consumes_laa(l)) anchor_cache = &layers_[*cfg.laa_anchor_layer];
    const bool aligned = anchor_cache != nullptr && anchor_cache->positions == cache.positions;

    Matrix concat(1, d);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      HeadAttention head;
      if (anchor_cache == nullptr) {
        head = attend_head(queries[h], cache.keys[h], cache.values[h], nullptr, nullptr, nullptr,
                           scale);
      } else if (aligned) {
        head = attend_head(queries[h], cache.keys[h], cache.values[h], &anchor_cache->keys[h],
                           &anchor_cache->values[h], nullptr, scale);
      } else {
        const Matrix k_extra = gather_rows(anchor_cache->keys[h], anchor_cache->positions,
                                           cache.positions);
        const Matrix v_extra = gather_rows(anchor_cache->values[h], anchor_cache->positions,
                                           cache.positions);
        head = attend_head(queries[h], cache.keys[h], cache.values[h], &k_extra, &v_extra, nullptr,
                           scale);
      }
      concat.set_col_block(h * dk, head.output);
      if (!next_feedback.empty()) {
        // Fold LAA halves back onto their positions.
        const auto w = head.weights.row(0);
        const std::size_t m = cache.positions.size();
        for (std::size_t c = 0; c < w.size(); ++c) next_feedback[c % m] += w[c];
      }
    }
    x += numerics::matmul(concat, lw.wo);
    detail::check_finite(x, l, "attention");
    const Matrix h2 = detail::layer_norm_rows(x, lw.ln2_gain, nullptr);
    x += detail::mlp(lw, h2, nullptr, nullptr);
    detail::check_finite(x, l, "mlp");
  }
  feedback_ = std::move(next_feedback);

  if (want_logits) {
    const Matrix hf = detail::layer_norm_rows(x, weights_.final_gain, nullptr);
    const Matrix logits = numerics::matmul_bt(hf, weights_.embedding);
    logits_.assign(logits.storage().begin(), logits.storage().end());
  } else {
    logits_.clear();
  }
}

std::vector<TokenId> generate(const ModelWeights& weights, std::span<const TokenId> prompt,
                              std::size_t max_new, const cache::PolicySpec& policy,
                              DecodeOptions options) {
  if (prompt.empty()) throw InputError("generate: empty prompt");
  std::vector<TokenId> out(prompt.begin(), prompt.end());
  if (max_new == 0) return out;

  std::size_t planted = prompt.size();
  if (policy.plants_anchors())
    planted += static_cast<std::size_t>(std::count(prompt.begin(), prompt.end(), policy.linebreak_id));
  if (planted > weights.config.max_seq)
    throw LengthError("prompt needs " + std::to_string(planted) + " positions, max_seq is " +
                      std::to_string(weights.config.max_seq));

  DecodeSession session(weights, policy, options);
  const TokenId anchor_id = weights.config.anchor_token_id;
  TokenId next = greedy_token(session.prefill(prompt), anchor_id);
  for (std::size_t i = 0; i < max_new; ++i) {
    out.push_back(next);
    if (i + 1 == max_new) break;
    const std::size_t needed =
        1 + (policy.plants_anchors() && next == policy.linebreak_id ? 1 : 0);
    if (session.position() + needed > weights.config.max_seq) break;
    next = greedy_token(session.feed(next), anchor_id);
  }
  return out;
}

}  // namespace anchorkv::model
