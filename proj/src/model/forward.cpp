// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/model/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "anchorkv/errors.hpp"
#include "anchorkv/model/attention.hpp"
#include "anchorkv/numerics/linalg.hpp"
#include "internal.hpp"

namespace anchorkv::model {

namespace {
constexpr double kInvSqrt2 = 0.5 * std::numbers::sqrt2;
}  // namespace

namespace detail {

Matrix layer_norm_rows(const Matrix& x, const Matrix& gain, NormCache* cache) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (gain.size() != d) throw ShapeError("layer norm gain width mismatch");
  Matrix y(n, d);
  if (cache != nullptr) {
    cache->xhat = Matrix(n, d);
    cache->inv_std.assign(n, 0.0);
  }
  const auto g = gain.flat();
  for (std::size_t r = 0; r < n; ++r) {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
    auto yr = y.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double xhat = (xr[c] - mean) * inv_std;
      yr[c] = g[c] * xhat;
      if (cache != nullptr) cache->xhat(r, c) = xhat;
    }
    if (cache != nullptr) cache->inv_std[r] = inv_std;
  }
  return y;
}

Matrix layer_norm_rows_backward(const Matrix& dy, const Matrix& gain, const NormCache& cache,
                                Matrix& dgain) {
  const std::size_t n = dy.rows();
  const std::size_t d = dy.cols();
  Matrix dx(n, d);
  const auto g = gain.flat();
  auto dg = dgain.flat();
  std::vector<double> dxhat(d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto dyr = dy.row(r);
    const auto xh = cache.xhat.row(r);
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dxhat[c] = dyr[c] * g[c];
      dg[c] += dyr[c] * xh[c];
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * xh[c];
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    auto dxr = dx.row(r);
    for (std::size_t c = 0; c < d; ++c)
      dxr[c] = cache.inv_std[r] * (dxhat[c] - mean_dxhat - xh[c] * mean_dxhat_xhat);
  }
  return dx;
}

Matrix gelu_rows(const Matrix& u) {
  Matrix a = u;
  for (double& v : a.storage()) v = gelu(v);
  return a;
}

Matrix mlp(const LayerWeights& layer, const Matrix& h, Matrix* u_out, Matrix* act_out) {
  Matrix u = numerics::matmul(h, layer.w_in);
  Matrix act = gelu_rows(u);
  Matrix out = numerics::matmul(act, layer.w_out);
  if (u_out != nullptr) *u_out = std::move(u);
  if (act_out != nullptr) *act_out = std::move(act);
  return out;
}

void check_finite(const Matrix& m, std::size_t layer, const char* where) {
  if (!m.all_finite())
    throw NumericError("non-finite activation in layer " + std::to_string(layer) + " (" + where +
                       ")");
}

}  // namespace detail

namespace {

using detail::NormCache;

struct LayerTape {
  NormCache ln1;
  Matrix h1;
  std::vector<Matrix> q, k, v;  // per head; q and k already rotated
  std::vector<Matrix> weights;  // per head
  Matrix concat;
  NormCache ln2;
  Matrix h2;
  Matrix u;
  Matrix act;
};

struct Tape {
  std::vector<LayerTape> layers;
  NormCache lnf;
  Matrix hf;
};

double gelu_grad(double x) noexcept {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi * kInvSqrt2);
  return cdf + x * pdf;
}

std::int64_t key_position(const ModelConfig& cfg, const AttentionPlan& plan, std::size_t layer,
                          std::size_t pos, std::size_t head) {
  if (plan.mhpe && cfg.is_taa_layer(layer)) return plan.mhpe->at(pos, head);
  return plan.positions[pos];
}

void validate(const ModelWeights& w, std::span<const TokenId> tokens, const AttentionPlan& plan) {
  const auto& cfg = w.config;
  const std::size_t n = tokens.size();
  if (n == 0) throw InputError("forward: empty token sequence");
  if (n > cfg.max_seq)
    throw LengthError("sequence of " + std::to_string(n) + " tokens exceeds max_seq " +
                      std::to_string(cfg.max_seq));
  for (TokenId t : tokens)
    if (t < 0 || static_cast<std::size_t>(t) >= cfg.vocab_size)
      throw InputError("token id " + std::to_string(t) + " outside vocabulary");
  if (plan.size() != n || plan.dense_mask.size() != n || plan.taa_mask.size() != n)
    throw ShapeError("attention plan covers " + std::to_string(plan.size()) + " positions, " +
                     std::to_string(n) + " tokens given");
  if (plan.mhpe && (plan.mhpe->size() != n || plan.mhpe->n_heads() != cfg.n_heads))
    throw ShapeError("mhpe positions do not match the sequence and head count");
}

Matrix run_forward(const ModelWeights& w, std::span<const TokenId> tokens,
                   const AttentionPlan& plan, Tape& tape, ForwardTrace* trace, bool capture) {
  validate(w, tokens, plan);
  const auto& cfg = w.config;
  const std::size_t n = tokens.size();
  const std::size_t d = cfg.d_model;
  const std::size_t dk = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const RotaryFrequencies freqs(dk, cfg.rope_base);

  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = w.embedding.row(static_cast<std::size_t>(tokens[i]));
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  if (trace != nullptr) {
    trace->residual.assign(1, x);
    trace->residual_mid.clear();
    trace->attention.assign(capture ? cfg.n_layers : 0, {});
  }

  tape.layers.assign(cfg.n_layers, {});
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const LayerWeights& lw = w.layers[l];
    LayerTape& t = tape.layers[l];
    const bool taa = cfg.is_taa_layer(l);
    const Matrix& bias = taa ? plan.taa_mask.bias() : plan.dense_mask.bias();
    const LayerTape* anchor_tape = cfg.consumes_laa(l) ? &tape.layers[*cfg.laa_anchor_layer] : nullptr;

    t.h1 = detail::layer_norm_rows(x, lw.ln1_gain, &t.ln1);
    const Matrix q_all = numerics::matmul(t.h1, lw.wq);
    const Matrix k_all = numerics::matmul(t.h1, lw.wk);
    const Matrix v_all = numerics::matmul(t.h1, lw.wv);

    t.q.resize(cfg.n_heads);
    t.k.resize(cfg.n_heads);
    t.v.resize(cfg.n_heads);
    t.weights.resize(cfg.n_heads);
    t.concat = Matrix(n, d);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      t.q[h] = q_all.col_block(h * dk, dk);
      t.k[h] = k_all.col_block(h * dk, dk);
      t.v[h] = v_all.col_block(h * dk, dk);
      for (std::size_t i = 0; i < n; ++i) {
        freqs.rotate(t.q[h].row(i), plan.positions[i]);
        freqs.rotate(t.k[h].row(i), key_position(cfg, plan, l, i, h));
      }
      HeadAttention head =
          attend_head(t.q[h], t.k[h], t.v[h], anchor_tape ? &anchor_tape->k[h] : nullptr,
                      anchor_tape ? &anchor_tape->v[h] : nullptr, &bias, scale);
      t.concat.set_col_block(h * dk, head.output);
      if (trace != nullptr && capture) trace->attention[l].push_back(head.weights);
      t.weights[h] = std::move(head.weights);
    }
    x += numerics::matmul(t.concat, lw.wo);
    detail::check_finite(x, l, "attention");
    if (trace != nullptr) trace->residual_mid.push_back(x);

    t.h2 = detail::layer_norm_rows(x, lw.ln2_gain, &t.ln2);
    x += detail::mlp(lw, t.h2, &t.u, &t.act);
    detail::check_finite(x, l, "mlp");
    if (trace != nullptr) trace->residual.push_back(x);
  }

  tape.hf = detail::layer_norm_rows(x, w.final_gain, &tape.lnf);
  Matrix logits = numerics::matmul_bt(tape.hf, w.embedding);
  detail::check_finite(logits, cfg.n_layers, "logits");
  return logits;
}

void run_backward(const ModelWeights& w, std::span<const TokenId> tokens,
                  const AttentionPlan& plan, const Tape& tape, const Matrix& dlogits,
                  ModelWeights& g) {
  const auto& cfg = w.config;
  const std::size_t n = tokens.size();
  const std::size_t d = cfg.d_model;
  const std::size_t dk = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const RotaryFrequencies freqs(dk, cfg.rope_base);

  // logits = hf * E^T
  numerics::matmul_at_acc(dlogits, tape.hf, g.embedding);
  Matrix dx = detail::layer_norm_rows_backward(numerics::matmul(dlogits, w.embedding),
                                               w.final_gain, tape.lnf, g.final_gain);

  // Gradients arriving at the anchor layer's rotated keys and values from
  // deeper LAA consumers, per head.
  std::vector<Matrix> laa_dk(cfg.n_heads), laa_dv(cfg.n_heads);

  for (std::size_t l = cfg.n_layers; l-- > 0;) {
    const LayerWeights& lw = w.layers[l];
    LayerWeights& lg = g.layers[l];
    const LayerTape& t = tape.layers[l];
    const bool consumer = cfg.consumes_laa(l);
    const LayerTape* anchor_tape = consumer ? &tape.layers[*cfg.laa_anchor_layer] : nullptr;

    // MLP: x_out = x_mid + gelu(h2 w_in) w_out
    numerics::matmul_at_acc(t.act, dx, lg.w_out);
    Matrix du = numerics::matmul_bt(dx, lw.w_out);
    for (std::size_t i = 0; i < du.size(); ++i) du.storage()[i] *= gelu_grad(t.u.storage()[i]);
    numerics::matmul_at_acc(t.h2, du, lg.w_in);
    dx += detail::layer_norm_rows_backward(numerics::matmul_bt(du, lw.w_in), lw.ln2_gain, t.ln2,
                                           lg.ln2_gain);

    // Attention: x_mid = x_in + concat w_o
    numerics::matmul_at_acc(t.concat, dx, lg.wo);
    const Matrix dconcat = numerics::matmul_bt(dx, lw.wo);
    Matrix dq_all(n, d), dk_all(n, d), dv_all(n, d);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      HeadAttentionGrads hg = attend_head_backward(
          t.q[h], t.k[h], t.v[h], anchor_tape ? &anchor_tape->k[h] : nullptr,
          anchor_tape ? &anchor_tape->v[h] : nullptr, t.weights[h], dconcat.col_block(h * dk, dk),
          scale);
      if (consumer) {
        if (laa_dk[h].empty()) {
          laa_dk[h] = Matrix(n, dk);
          laa_dv[h] = Matrix(n, dk);
        }
        laa_dk[h] += hg.dk_extra;
        laa_dv[h] += hg.dv_extra;
      }
      if (cfg.laa_anchor_layer && l == *cfg.laa_anchor_layer && !laa_dk[h].empty()) {
        hg.dk += laa_dk[h];
        hg.dv += laa_dv[h];
      }
      for (std::size_t i = 0; i < n; ++i) {
        freqs.rotate(hg.dq.row(i), -plan.positions[i]);
        freqs.rotate(hg.dk.row(i), -key_position(cfg, plan, l, i, h));
      }
      dq_all.set_col_block(h * dk, hg.dq);
      dk_all.set_col_block(h * dk, hg.dk);
      dv_all.set_col_block(h * dk, hg.dv);
    }
    numerics::matmul_at_acc(t.h1, dq_all, lg.wq);
    numerics::matmul_at_acc(t.h1, dk_all, lg.wk);
    numerics::matmul_at_acc(t.h1, dv_all, lg.wv);
    Matrix dh1 = numerics::matmul_bt(dq_all, lw.wq);
    dh1 += numerics::matmul_bt(dk_all, lw.wk);
    dh1 += numerics::matmul_bt(dv_all, lw.wv);
    dx += detail::layer_norm_rows_backward(dh1, lw.ln1_gain, t.ln1, lg.ln1_gain);
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto dst = g.embedding.row(static_cast<std::size_t>(tokens[i]));
    const auto src = dx.row(i);
    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
  }
}

/// Cross-entropy of row `r` against `target`; writes softmax - onehot into
/// `dlogits` scaled by `weight` when given.
double row_cross_entropy(const Matrix& logits, std::size_t r, TokenId target, Matrix* dlogits,
                         double weight) {
  const auto row = logits.row(r);
  const double peak = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (double v : row) total += std::exp(v - peak);
  const double log_z = peak + std::log(total);
  if (dlogits != nullptr) {
    auto dr = dlogits->row(r);
    for (std::size_t c = 0; c < row.size(); ++c) dr[c] = weight * std::exp(row[c] - log_z);
    dr[static_cast<std::size_t>(target)] -= weight;
  }
  return log_z - row[static_cast<std::size_t>(target)];
}

double target_weight(const TrainingExample& ex, std::size_t i, TokenId anchor_id) {
  if (ex.tokens[i + 1] == anchor_id) return 0.0;
  return ex.target_weights.empty() ? 1.0 : ex.target_weights[i];
}

}  // namespace

double gelu(double x) noexcept { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

AttentionPlan AttentionPlan::causal(std::size_t n) {
  AttentionPlan plan;
  plan.dense_mask = anchor::AttentionMask::causal(n);
  plan.taa_mask = plan.dense_mask;
  plan.positions.resize(n);
  std::iota(plan.positions.begin(), plan.positions.end(), std::int64_t{0});
  return plan;
}

ForwardTrace forward(const ModelWeights& weights, std::span<const TokenId> tokens,
                     const AttentionPlan& plan, bool capture) {
  Tape tape;
  ForwardTrace trace;
  trace.logits = run_forward(weights, tokens, plan, tape, &trace, capture);
  return trace;
}

LossAndGrads loss_and_grads(const ModelWeights& weights, std::span<const TrainingExample> batch) {
  const TokenId anchor_id = weights.config.anchor_token_id;
  double total_weight = 0.0;
  LossAndGrads out;
  for (const auto& ex : batch) {
    if (!ex.target_weights.empty() && ex.target_weights.size() + 1 != ex.tokens.size())
      throw ShapeError("target_weights needs one entry per predicted position");
    for (std::size_t i = 0; i + 1 < ex.tokens.size(); ++i) {
      const double w = target_weight(ex, i, anchor_id);
      if (w < 0.0 || !std::isfinite(w)) throw InputError("target weights must be finite and >= 0");
      total_weight += w;
      out.targets += w > 0.0;
    }
  }
  if (out.targets == 0) throw InputError("loss_and_grads: batch has no prediction targets");

  out.grads = ModelWeights::zeros_like(weights);
  for (const auto& ex : batch) {
    Tape tape;
    Matrix logits;
    Matrix dlogits;
    bool any = false;
    for (std::size_t i = 0; i + 1 < ex.tokens.size(); ++i) {
      const double w = target_weight(ex, i, anchor_id) / total_weight;
      if (w == 0.0) continue;
      if (!any) {
        logits = run_forward(weights, ex.tokens, ex.plan, tape, nullptr, false);
        dlogits = Matrix(logits.rows(), logits.cols());
        any = true;
      }
      out.loss += w * row_cross_entropy(logits, i, ex.tokens[i + 1], &dlogits, w);
    }
    if (any) run_backward(weights, ex.tokens, ex.plan, tape, dlogits, out.grads);
  }
  return out;
}

SequenceLoss sequence_loss(const ModelWeights& weights, std::span<const TokenId> tokens,
                           const AttentionPlan& plan) {
  const TokenId anchor_id = weights.config.anchor_token_id;
  Tape tape;
  const Matrix logits = run_forward(weights, tokens, plan, tape, nullptr, false);
  SequenceLoss out;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const TokenId target = tokens[i + 1];
    if (target == anchor_id) continue;
    out.total += row_cross_entropy(logits, i, target, nullptr, 0.0);
    ++out.targets;
    out.correct += greedy_token(logits.row(i), anchor_id) == target;
  }
  return out;
}

TokenId greedy_token(std::span<const double> logits, TokenId anchor_id) {
  TokenId best = -1;
  double best_value = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (static_cast<TokenId>(c) == anchor_id) continue;
    if (best < 0 || logits[c] > best_value) {
      best = static_cast<TokenId>(c);
      best_value = logits[c];
    }
  }
  return best;
}

}  // namespace anchorkv::model
