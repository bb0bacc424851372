// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/model/config.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "anchorkv/errors.hpp"

namespace anchorkv::model {

using nlohmann::json;

void ModelConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
  if (d_model == 0 || n_heads == 0) throw ConfigError("d_model and n_heads must be positive");
  if (d_model % n_heads != 0)
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
  if (head_dim() % 2 != 0)
    throw ConfigError("rotary embedding needs an even head dimension, got " +
                      std::to_string(head_dim()));
  if (n_layers == 0) throw ConfigError("n_layers must be positive");
  if (max_seq == 0) throw ConfigError("max_seq must be positive");
  if (!(rope_base > 1.0) || !std::isfinite(rope_base))
    throw ConfigError("rope_base must be a finite value above 1");
  if (anchor_token_id < 0 || static_cast<std::size_t>(anchor_token_id) >= vocab_size)
    throw ConfigError("anchor_token_id " + std::to_string(anchor_token_id) +
                      " outside vocabulary of " + std::to_string(vocab_size));
  for (std::size_t layer : taa_layers)
    if (layer >= n_layers) throw ConfigError("taa layer " + std::to_string(layer) + " out of range");
  if (laa_anchor_layer) {
    if (*laa_anchor_layer >= n_layers)
      throw ConfigError("laa_anchor_layer " + std::to_string(*laa_anchor_layer) +
                        " out of range");
    if (!is_taa_layer(*laa_anchor_layer))
      throw ConfigError("laa_anchor_layer must itself be a taa layer so its cache is compressed");
  }
}

std::string ModelConfig::to_json() const {
  json j;
  j["vocab_size"] = vocab_size;
  j["d_model"] = d_model;
  j["n_heads"] = n_heads;
  j["n_layers"] = n_layers;
  j["max_seq"] = max_seq;
  j["rope_base"] = rope_base;
  j["anchor_token_id"] = anchor_token_id;
  j["laa_anchor_layer"] = laa_anchor_layer ? json(*laa_anchor_layer) : json(nullptr);
  j["taa_layers"] = taa_layers;
  j["seed"] = seed;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> kKnown = {
      "vocab_size", "d_model",         "n_heads",        "n_layers",   "max_seq",
      "rope_base",  "anchor_token_id", "laa_anchor_layer", "taa_layers", "seed"};
  for (const auto& [key, _] : j.items())
    if (!kKnown.contains(key)) throw ConfigError("unknown config field '" + key + "'");

  ModelConfig cfg;
  try {
    cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
    cfg.d_model = j.value("d_model", cfg.d_model);
    cfg.n_heads = j.value("n_heads", cfg.n_heads);
    cfg.n_layers = j.value("n_layers", cfg.n_layers);
    cfg.max_seq = j.value("max_seq", cfg.max_seq);
    cfg.rope_base = j.value("rope_base", cfg.rope_base);
    cfg.anchor_token_id = j.value("anchor_token_id", cfg.anchor_token_id);
    if (j.contains("laa_anchor_layer") && !j["laa_anchor_layer"].is_null())
      cfg.laa_anchor_layer = j["laa_anchor_layer"].get<std::size_t>();
    if (j.contains("taa_layers")) cfg.taa_layers = j["taa_layers"].get<std::set<std::size_t>>();
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace anchorkv::model
