// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "anchorkv/model/rope.hpp"
#include "anchorkv/model/weights.hpp"

namespace anchorkv::model::detail {

struct NormCache {
  Matrix xhat;
  std::vector<double> inv_std;
};

/// Row-wise gain * (x - mean) / sqrt(var + eps). Shared by the batched
/// forward and the incremental decoder so both see identical arithmetic.
Matrix layer_norm_rows(const Matrix& x, const Matrix& gain, NormCache* cache);
Matrix layer_norm_rows_backward(const Matrix& dy, const Matrix& gain, const NormCache& cache,
                                Matrix& dgain);

Matrix gelu_rows(const Matrix& u);

/// MLP half of a block: returns act * w_out where act = gelu(h * w_in).
Matrix mlp(const LayerWeights& layer, const Matrix& h, Matrix* u_out, Matrix* act_out);

void check_finite(const Matrix& m, std::size_t layer, const char* where);

}  // namespace anchorkv::model::detail
