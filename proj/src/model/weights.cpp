// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/model/weights.hpp"

#include <cmath>

namespace anchorkv::model {

namespace {

constexpr double kEmbeddingStd = 0.02;

Matrix normal_matrix(std::size_t rows, std::size_t cols, double stddev, numerics::Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.storage()) v = rng.normal(0.0, stddev);
  return m;
}

template <typename Weights, typename Fn>
void visit(Weights& w, Fn&& fn) {
  fn(std::string("embedding"), w.embedding);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto& layer = w.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    fn(p + "wq", layer.wq);
    fn(p + "wk", layer.wk);
    fn(p + "wv", layer.wv);
    fn(p + "wo", layer.wo);
    fn(p + "ln1_gain", layer.ln1_gain);
    fn(p + "ln2_gain", layer.ln2_gain);
    fn(p + "w_in", layer.w_in);
    fn(p + "w_out", layer.w_out);
  }
  fn(std::string("final_gain"), w.final_gain);
}

}  // namespace

ModelWeights ModelWeights::zeros_like(const ModelWeights& shape_of) {
  ModelWeights z = shape_of;
  z.for_each([](const std::string&, Matrix& m) { m.fill(0.0); });
  return z;
}

void ModelWeights::for_each(const std::function<void(const std::string&, Matrix&)>& fn) {
  visit(*this, fn);
}

void ModelWeights::for_each(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  visit(*this, fn);
}

std::size_t ModelWeights::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

bool ModelWeights::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Matrix& m) { ok = ok && m.all_finite(); });
  return ok;
}

ModelWeights init_model(const ModelConfig& cfg, numerics::Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.d_model;
  // Projections at 1/sqrt(d): with a smaller scale, signals routed through
  // two attention hops (token -> anchor -> query) start too weak to be learned.
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
  const double residual_std = proj_std / std::sqrt(2.0 * static_cast<double>(cfg.n_layers));

  ModelWeights w;
  w.config = cfg;
  w.embedding = normal_matrix(cfg.vocab_size, d, kEmbeddingStd, rng);
  w.layers.reserve(cfg.n_layers);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    LayerWeights layer;
    layer.wq = normal_matrix(d, d, proj_std, rng);
    layer.wk = normal_matrix(d, d, proj_std, rng);
    layer.wv = normal_matrix(d, d, proj_std, rng);
    layer.wo = normal_matrix(d, d, residual_std, rng);
    layer.ln1_gain = Matrix(1, d, 1.0);
    layer.ln2_gain = Matrix(1, d, 1.0);
    layer.w_in = normal_matrix(d, cfg.ffn_dim(), proj_std, rng);
    layer.w_out = normal_matrix(cfg.ffn_dim(), d, residual_std, rng);
    w.layers.push_back(std::move(layer));
  }
  w.final_gain = Matrix(1, d, 1.0);
  return w;
}

bool is_decayed(const std::string& tensor_name) {
  return tensor_name.find("gain") == std::string::npos;
}

}  // namespace anchorkv::model
