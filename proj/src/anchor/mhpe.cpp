// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/anchor/mhpe.hpp"

#include <cmath>
#include <string>

#include "anchorkv/errors.hpp"
#include "anchorkv/model/rope.hpp"

namespace anchorkv::anchor {

MhpePositions::MhpePositions(std::size_t n, std::size_t n_heads)
    : n_(n), heads_(n_heads), data_(n * n_heads) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t h = 0; h < n_heads; ++h) at(i, h) = static_cast<std::int64_t>(i);
}

std::vector<std::int64_t> span_head_positions(const AnchorSpan& span, std::size_t n_heads) {
  if (n_heads == 0) throw InputError("mhpe needs at least one head");
  std::vector<std::int64_t> pos(n_heads, span.anchor_pos);
  const std::int64_t m = span.length();
  if (m <= 0) return pos;
  const std::int64_t first = span.segment_start + 1;
  const auto heads = static_cast<std::int64_t>(n_heads);
  if (m <= heads) {
    for (std::int64_t h = 0; h < heads; ++h) pos[h] = first + (h % m);
  } else {
    // m > n_heads >= 1 here, and n_heads == 1 picks the first position.
    for (std::int64_t h = 0; h < heads; ++h) {
      const double offset =
          heads == 1 ? 0.0
                     : static_cast<double>(h) * static_cast<double>(m - 1) /
                           static_cast<double>(heads - 1);
      pos[h] = first + static_cast<std::int64_t>(std::floor(offset + 0.5));
    }
  }
  return pos;
}

MhpePositions assign_mhpe_positions(const AnchoredSequence& seq, std::size_t n_heads) {
  if (n_heads == 0) throw InputError("mhpe needs at least one head");
  MhpePositions out(seq.size(), n_heads);
  for (const AnchorSpan& span : seq.spans) {
    const auto heads = span_head_positions(span, n_heads);
    for (std::size_t h = 0; h < n_heads; ++h)
      out.at(static_cast<std::size_t>(span.anchor_pos), h) = heads[h];
  }
  return out;
}

std::vector<double> mhpe_rotate_keys(std::span<const double> k_heads,
                                     std::span<const std::int64_t> positions, double base) {
  if (positions.empty() || k_heads.size() % positions.size() != 0)
    throw ShapeError("mhpe: key width " + std::to_string(k_heads.size()) +
                     " does not split into " + std::to_string(positions.size()) + " heads");
  const std::size_t head_dim = k_heads.size() / positions.size();
  const model::RotaryFrequencies freqs(head_dim, base);
  std::vector<double> out(k_heads.begin(), k_heads.end());
  for (std::size_t h = 0; h < positions.size(); ++h)
    freqs.rotate(std::span<double>(out).subspan(h * head_dim, head_dim), positions[h]);
  return out;
}

}  // namespace anchorkv::anchor
