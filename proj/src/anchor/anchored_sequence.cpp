// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/anchor/anchored_sequence.hpp"

#include <algorithm>
#include <string>

#include "anchorkv/errors.hpp"

namespace anchorkv::anchor {

namespace {

void add_anchor(AnchoredSequence& seq, std::size_t pos) {
  const std::int64_t start = seq.anchors.empty() ? -1 : static_cast<std::int64_t>(seq.anchors.back());
  seq.anchors.push_back(pos);
  seq.spans.push_back({start, static_cast<std::int64_t>(pos)});
}

}  // namespace

AnchoredSequence plant_anchors(std::span<const TokenId> tokens, TokenId linebreak_id,
                               TokenId anchor_id) {
  if (std::find(tokens.begin(), tokens.end(), anchor_id) != tokens.end())
    throw ContaminationError("input already contains the anchor token " +
                             std::to_string(anchor_id));
  AnchoredSequence seq;
  seq.tokens.reserve(tokens.size() + tokens.size() / 4);
  for (TokenId t : tokens) {
    seq.tokens.push_back(t);
    if (t == linebreak_id) {
      add_anchor(seq, seq.tokens.size());
      seq.tokens.push_back(anchor_id);
    }
  }
  return seq;
}

AnchoredSequence index_anchors(std::span<const TokenId> planted, TokenId linebreak_id,
                               TokenId anchor_id) {
  AnchoredSequence seq;
  seq.tokens.assign(planted.begin(), planted.end());
  for (std::size_t i = 0; i < planted.size(); ++i) {
    if (planted[i] != anchor_id) continue;
    if (i == 0 || planted[i - 1] != linebreak_id)
      throw InputError("anchor at position " + std::to_string(i) + " does not follow a linebreak");
    add_anchor(seq, i);
  }
  return seq;
}

std::vector<TokenId> strip_anchors(std::span<const TokenId> planted, TokenId anchor_id) {
  std::vector<TokenId> out;
  out.reserve(planted.size());
  std::copy_if(planted.begin(), planted.end(), std::back_inserter(out),
               [&](TokenId t) { return t != anchor_id; });
  return out;
}

}  // namespace anchorkv::anchor
