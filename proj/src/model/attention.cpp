// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/model/attention.hpp"

#include <string>

#include "anchorkv/errors.hpp"
#include "anchorkv/numerics/linalg.hpp"

namespace anchorkv::model {

namespace {

bool has_extra(const Matrix* k_extra) { return k_extra != nullptr && k_extra->rows() > 0; }

Matrix scores_for(const Matrix& q, const Matrix& k, const Matrix* bias, double scale) {
  Matrix s = numerics::matmul_bt(q, k);
  s *= scale;
  if (bias != nullptr) s += *bias;
  return s;
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  std::copy(top.storage().begin(), top.storage().end(), out.storage().begin());
  std::copy(bottom.storage().begin(), bottom.storage().end(),
            out.storage().begin() + static_cast<std::ptrdiff_t>(top.size()));
  return out;
}

}  // namespace

HeadAttention attend_head(const Matrix& q, const Matrix& k, const Matrix& v, const Matrix* k_extra,
                          const Matrix* v_extra, const Matrix* bias, double scale) {
  if (q.cols() != k.cols() || k.rows() != v.rows())
    throw ShapeError("attention: q/k/v shapes disagree");
  if (bias != nullptr && (bias->rows() != q.rows() || bias->cols() != k.rows()))
    throw ShapeError("attention: bias is " + std::to_string(bias->rows()) + "x" +
                     std::to_string(bias->cols()) + ", expected " + std::to_string(q.rows()) +
                     "x" + std::to_string(k.rows()));

  HeadAttention out;
  if (!has_extra(k_extra)) {
    out.weights = numerics::softmax_rows(scores_for(q, k, bias, scale));
    out.output = numerics::matmul(out.weights, v);
    return out;
  }

  if (v_extra == nullptr || k_extra->rows() != v_extra->rows() || k_extra->cols() != k.cols() ||
      v_extra->cols() != v.cols() || k_extra->rows() != k.rows())
    throw ShapeError("attention: extra key/value shapes disagree with the current layer");

  const Matrix own = scores_for(q, k, bias, scale);
  const Matrix extra = scores_for(q, *k_extra, bias, scale);
  const std::size_t m = k.rows();
  Matrix scores(q.rows(), 2 * m);
  scores.set_col_block(0, own);
  scores.set_col_block(m, extra);
  for (std::size_t r = 0; r < scores.rows(); ++r) numerics::softmax_inplace(scores.row(r));
  out.weights = std::move(scores);
  out.output = numerics::matmul(out.weights, stack_rows(v, *v_extra));
  return out;
}

HeadAttentionGrads attend_head_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                        const Matrix* k_extra, const Matrix* v_extra,
                                        const Matrix& weights, const Matrix& d_output,
                                        double scale) {
  const bool extra = has_extra(k_extra);
  const Matrix keys = extra ? stack_rows(k, *k_extra) : k;
  const Matrix values = extra ? stack_rows(v, *v_extra) : v;

  // d weights, then through the row softmax.
  Matrix d_scores = numerics::matmul_bt(d_output, values);
  for (std::size_t r = 0; r < d_scores.rows(); ++r) {
    auto dw = d_scores.row(r);
    const auto w = weights.row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < dw.size(); ++c) dot += dw[c] * w[c];
    for (std::size_t c = 0; c < dw.size(); ++c) dw[c] = w[c] * (dw[c] - dot);
  }
  d_scores *= scale;

  HeadAttentionGrads g;
  g.dq = numerics::matmul(d_scores, keys);
  Matrix dkeys = numerics::matmul_at(d_scores, q);
  Matrix dvalues = numerics::matmul_at(weights, d_output);
  if (!extra) {
    g.dk = std::move(dkeys);
    g.dv = std::move(dvalues);
    return g;
  }
  const std::size_t m = k.rows();
  auto split = [m](const Matrix& both, Matrix& first, Matrix& second) {
    const std::size_t w = both.cols();
    first = Matrix(m, w, std::vector<double>(both.storage().begin(),
                                             both.storage().begin() + static_cast<std::ptrdiff_t>(m * w)));
    second = Matrix(both.rows() - m, w,
                    std::vector<double>(both.storage().begin() + static_cast<std::ptrdiff_t>(m * w),
                                        both.storage().end()));
  };
  split(dkeys, g.dk, g.dk_extra);
  split(dvalues, g.dv, g.dv_extra);
  return g;
}

}  // namespace anchorkv::model
