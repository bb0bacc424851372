// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "anchorkv/model/config.hpp"
#include "anchorkv/numerics/matrix.hpp"
#include "anchorkv/numerics/rng.hpp"

namespace anchorkv::model {

using numerics::Matrix;

/// One transformer block. Projections act on row vectors: Q = x * wq. Head h
/// owns columns [h*d_k, (h+1)*d_k) of wq/wk/wv and the same rows of wo.
struct LayerWeights {
  Matrix wq;        // d x d
  Matrix wk;        // d x d
  Matrix wv;        // d x d
  Matrix wo;        // d x d
  Matrix ln1_gain;  // 1 x d, before attention
  Matrix ln2_gain;  // 1 x d, before the MLP
  Matrix w_in;      // d x 4d
  Matrix w_out;     // 4d x d
};

/// All learned tensors. The output projection is tied to `embedding`.
struct ModelWeights {
  ModelConfig config;
  Matrix embedding;   // vocab x d
  std::vector<LayerWeights> layers;
  Matrix final_gain;  // 1 x d

  /// Same shapes as `shape_of`, every entry zero; used for gradients and
  /// optimizer moments.
  static ModelWeights zeros_like(const ModelWeights& shape_of);

  /// Visits every tensor with a stable name ("layers.0.wq", ...), in a fixed
  /// order shared by checkpoints and the optimizer.
  void for_each(const std::function<void(const std::string&, Matrix&)>& fn);
  void for_each(const std::function<void(const std::string&, const Matrix&)>& fn) const;

  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Normal(0, 0.02) initialisation with wo and w_out scaled by
/// 1/sqrt(2 * n_layers); gains start at one. Deterministic in `rng`.
ModelWeights init_model(const ModelConfig& cfg, numerics::Rng& rng);

/// True for tensors that receive weight decay (every matrix except gains).
bool is_decayed(const std::string& tensor_name);

}  // namespace anchorkv::model
