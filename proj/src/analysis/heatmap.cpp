// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/analysis/heatmap.hpp"

#include <sstream>

#include "anchorkv/errors.hpp"

namespace anchorkv::analysis {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

numerics::Matrix heatmap_grid(const AttentionRecord& record, std::size_t layer,
                              std::optional<std::size_t> head) {
  if (layer >= record.layers())
    throw InputError("heatmap: layer " + std::to_string(layer) + " out of range");
  const auto& heads = record.weights[layer];
  if (head && *head >= heads.size())
    throw InputError("heatmap: head " + std::to_string(*head) + " out of range");
  if (head) return heads[*head];
  numerics::Matrix mean(record.size(), record.size());
  for (const auto& w : heads) mean += w;
  mean *= 1.0 / static_cast<double>(heads.size());
  return mean;
}

std::string export_heatmap(const AttentionRecord& record, std::size_t layer,
                           std::optional<std::size_t> head,
                           const std::vector<std::string>& labels) {
  const numerics::Matrix grid = heatmap_grid(record, layer, head);
  const std::size_t n = record.size();
  if (!labels.empty() && labels.size() != n)
    throw InputError("heatmap: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " tokens");
  auto label = [&](std::size_t i) {
    return csv_field(labels.empty() ? std::to_string(record.tokens[i]) : labels[i]);
  };
  const auto& mask = record.masks.at(layer);
  std::ostringstream out;
  out.precision(17);
  out << "query";
  for (std::size_t j = 0; j < n; ++j) out << ',' << label(j);
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << label(i);
    for (std::size_t j = 0; j < n; ++j) {
      out << ',';
      if (j <= i && mask.visible(i, j)) out << grid(i, j);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace anchorkv::analysis
