// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/model/optimizer.hpp"

#include <cmath>
#include <vector>

#include "anchorkv/errors.hpp"

namespace anchorkv::model {

namespace {

std::vector<Matrix*> tensors(ModelWeights& w) {
  std::vector<Matrix*> out;
  w.for_each([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> tensors(const ModelWeights& w) {
  std::vector<const Matrix*> out;
  w.for_each([&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

}  // namespace

AdamState AdamState::for_weights(const ModelWeights& w, AdamOptions options) {
  AdamState s{ModelWeights::zeros_like(w), ModelWeights::zeros_like(w), 0, options};
  return s;
}

void train_step(ModelWeights& weights, const ModelWeights& grads, AdamState& state, double lr) {
  std::vector<std::string> names;
  weights.for_each([&](const std::string& name, const Matrix&) { names.push_back(name); });
  auto w = tensors(weights);
  auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size())
    throw ShapeError("train_step: gradient layout does not match weights");

  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(o.beta1, t);
  const double bias2 = 1.0 - std::pow(o.beta2, t);

  for (std::size_t i = 0; i < w.size(); ++i) {
    if (g[i]->rows() != w[i]->rows() || g[i]->cols() != w[i]->cols())
      throw ShapeError("train_step: gradient for " + names[i] + " has the wrong shape");
    const double decay = is_decayed(names[i]) ? o.weight_decay : 0.0;
    auto wd = w[i]->flat();
    const auto gd = g[i]->flat();
    auto md = m[i]->flat();
    auto vd = v[i]->flat();
    for (std::size_t j = 0; j < wd.size(); ++j) {
      md[j] = o.beta1 * md[j] + (1.0 - o.beta1) * gd[j];
      vd[j] = o.beta2 * vd[j] + (1.0 - o.beta2) * gd[j] * gd[j];
      const double update = (md[j] / bias1) / (std::sqrt(vd[j] / bias2) + o.eps);
      wd[j] -= lr * (update + decay * wd[j]);
    }
  }
}

double clip_grad_norm(ModelWeights& grads, double max_norm) {
  double sq = 0.0;
  grads.for_each([&](const std::string&, const Matrix& m) {
    for (double x : m.storage()) sq += x * x;
  });
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    grads.for_each([&](const std::string&, Matrix& m) { m *= s; });
  }
  return norm;
}

}  // namespace anchorkv::model
