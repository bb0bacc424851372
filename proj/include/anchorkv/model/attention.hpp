// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "anchorkv/numerics/matrix.hpp"

namespace anchorkv::model {

using numerics::Matrix;

/// Result of one head's attention: the normalised weights (queries x keys,
/// with the extra keys appended as further columns) and the mixed values.
struct HeadAttention {
  Matrix weights;
  Matrix output;
};

/// softmax((q k~^T) * scale + bias) v~ where k~ = [k; k_extra] and
/// v~ = [v; v_extra]. `bias` (queries x keys, may be null) is applied to both
/// halves positionally and one softmax spans them. Null or empty extras give
/// plain attention.
HeadAttention attend_head(const Matrix& q, const Matrix& k, const Matrix& v, const Matrix* k_extra,
                          const Matrix* v_extra, const Matrix* bias, double scale);

struct HeadAttentionGrads {
  Matrix dq;
  Matrix dk;
  Matrix dv;
  Matrix dk_extra;  // empty without extras
  Matrix dv_extra;
};

/// Reverse pass of attend_head given the upstream gradient of `output`.
HeadAttentionGrads attend_head_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                        const Matrix* k_extra, const Matrix* v_extra,
                                        const Matrix& weights, const Matrix& d_output,
                                        double scale);

}  // namespace anchorkv::model
