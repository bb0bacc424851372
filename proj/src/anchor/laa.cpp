// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/anchor/laa.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "anchorkv/errors.hpp"

namespace anchorkv::anchor {

model::HeadAttention laa_attend(const numerics::Matrix& q, const numerics::Matrix& k,
                                const numerics::Matrix& v, const numerics::Matrix& k_anchor,
                                const numerics::Matrix& v_anchor, const AttentionMask& mask,
                                std::size_t d_k) {
  if (d_k == 0 || q.cols() != d_k || k.cols() != d_k)
    throw ShapeError("laa: query/key width must equal d_k=" + std::to_string(d_k));
  if (mask.size() != q.rows() || mask.size() != k.rows())
    throw ShapeError("laa: mask is " + std::to_string(mask.size()) + " wide for " +
                     std::to_string(q.rows()) + " queries and " + std::to_string(k.rows()) +
                     " keys");
  if (k_anchor.rows() != v_anchor.rows())
    throw ShapeError("laa: anchor keys and values have different row counts");
  const bool has_anchor = k_anchor.rows() > 0;
  if (has_anchor && (k_anchor.rows() != k.rows() || k_anchor.cols() != d_k ||
                     v_anchor.cols() != v.cols()))
    throw ShapeError("laa: anchor-layer K/V do not line up with the current layer's positions");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  return model::attend_head(q, k, v, has_anchor ? &k_anchor : nullptr,
                            has_anchor ? &v_anchor : nullptr, &mask.bias(), scale);
}

model::AttentionPlan make_anchor_plan(const AnchoredSequence& seq, std::size_t n_heads,
                                      const AnchorPlanOptions& options) {
  const std::size_t n = seq.size();
  model::AttentionPlan plan;
  plan.dense_mask = AttentionMask::causal(n);
  plan.taa_mask = build_anchor_mask(n, seq.anchors, {options.literal_slice, options.sinks});
  plan.positions.resize(n);
  std::iota(plan.positions.begin(), plan.positions.end(), std::int64_t{0});
  if (options.mhpe) plan.mhpe = assign_mhpe_positions(seq, n_heads);
  return plan;
}

}  // namespace anchorkv::anchor
