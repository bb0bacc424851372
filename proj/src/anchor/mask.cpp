// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/anchor/mask.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include "anchorkv/errors.hpp"
#include "anchorkv/numerics/linalg.hpp"

namespace anchorkv::anchor {

AttentionMask::AttentionMask(std::size_t n) : bias_(n, n, 0.0) {}

AttentionMask AttentionMask::causal(std::size_t n) {
  AttentionMask m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.hide(i, j);
  return m;
}

void AttentionMask::hide(std::size_t row, std::size_t col) noexcept {
  bias_(row, col) = numerics::kMaskedLogit;
}

void AttentionMask::hide_column(std::size_t col) noexcept {
  for (std::size_t i = 0; i < size(); ++i) hide(i, col);
}

std::vector<std::size_t> AttentionMask::visible_columns(std::size_t row) const {
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < size(); ++j)
    if (visible(row, j)) cols.push_back(j);
  return cols;
}

std::string AttentionMask::to_csv(std::span<const std::size_t> anchors) const {
  std::ostringstream out;
  out << "n,anchors\n" << size() << ',';
  for (std::size_t k = 0; k < anchors.size(); ++k) out << (k ? " " : "") << anchors[k];
  out << '\n';
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) out << (j ? "," : "") << (visible(i, j) ? 1 : 0);
    out << '\n';
  }
  return out.str();
}

AttentionMask build_anchor_mask(std::size_t n, std::span<const std::size_t> anchors,
                                const AnchorMaskOptions& options) {
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    if (anchors[k] >= n)
      throw InputError("anchor index " + std::to_string(anchors[k]) + " out of range for n=" +
                       std::to_string(n));
    if (k > 0 && anchors[k] <= anchors[k - 1])
      throw InputError("anchor indices must be strictly increasing");
  }

  std::vector<bool> is_anchor(n, false);
  for (std::size_t a : anchors) is_anchor[a] = true;

  AttentionMask mask = AttentionMask::causal(n);
  if (anchors.empty()) return mask;

  // For row i, the pairs (I[j], I[j+1]) with I[j+1] < i cover exactly the
  // range from I[0] up to the last anchor strictly before i, so each row
  // hides one contiguous stretch (anchors excepted unless literal).
  std::size_t before = 0;  // anchors strictly below the current row
  for (std::size_t i = 0; i < n; ++i) {
    while (before < anchors.size() && anchors[before] < i) ++before;

    if (before >= 2) {
      const std::size_t last = anchors[before - 1];
      for (std::size_t p = anchors[0]; p < last; ++p) {
        if (is_anchor[p] && !options.literal_slice) continue;
        mask.hide(i, p);
      }
    }
    if (options.sinks && before >= 1) {
      for (std::size_t p = *options.sinks; p < anchors[0]; ++p) mask.hide(i, p);
    }
  }
  return mask;
}

}  // namespace anchorkv::anchor
