// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>

namespace anchorkv {

using TokenId = std::int32_t;

}  // namespace anchorkv

namespace anchorkv::model {

/// Hyperparameters of the toy decoder. Field names double as the JSON keys of
/// the config file.
struct ModelConfig {
  std::size_t vocab_size = 97;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 4;
  std::size_t max_seq = 512;
  double rope_base = 10000.0;
  TokenId anchor_token_id = 96;
  /// Shallow layer whose K/V every deeper TAA layer also attends to.
  std::optional<std::size_t> laa_anchor_layer;
  /// Layers restricted to sinks, anchors and the current line.
  std::set<std::size_t> taa_layers;
  std::uint64_t seed = 0;

  std::size_t head_dim() const noexcept { return d_model / n_heads; }
  std::size_t ffn_dim() const noexcept { return 4 * d_model; }
  bool is_taa_layer(std::size_t layer) const { return taa_layers.contains(layer); }
  /// True when `layer` concatenates the anchor layer's K/V into its attention.
  bool consumes_laa(std::size_t layer) const {
    return laa_anchor_layer && is_taa_layer(layer) && layer > *laa_anchor_layer;
  }

  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace anchorkv::model
