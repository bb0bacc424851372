// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "anchorkv/model/weights.hpp"

namespace anchorkv::model {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  /// Decoupled decay applied to matrices only (gains are exempt).
  double weight_decay = 0.1;
};

struct AdamState {
  ModelWeights m;
  ModelWeights v;
  std::uint64_t step = 0;
  AdamOptions options;

  static AdamState for_weights(const ModelWeights& w, AdamOptions options = {});
};

/// One AdamW update in place. ShapeError if grads do not match weights.
void train_step(ModelWeights& weights, const ModelWeights& grads, AdamState& state, double lr);

/// Scales grads so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_grad_norm(ModelWeights& grads, double max_norm);

}  // namespace anchorkv::model
