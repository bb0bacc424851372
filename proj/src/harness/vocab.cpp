// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/harness/vocab.hpp"

#include "anchorkv/errors.hpp"

namespace anchorkv::harness {

TokenId Vocabulary::id_of(char c) {
  if (c == '\n') return kLinebreak;
  const auto u = static_cast<unsigned char>(c);
  if (u < 0x20 || u > 0x7e)
    throw InputError("character code " + std::to_string(u) + " is outside the vocabulary");
  return static_cast<TokenId>(u - 0x20);
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(id_of(c));
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> tokens) {
  std::string out;
  for (TokenId t : tokens) {
    if (t == kLinebreak) out += '\n';
    else if (t == kAnchor) out += "<ANC>";
    else if (t >= 0 && static_cast<std::size_t>(t) < kPrintable) out += static_cast<char>(t + 0x20);
    else throw InputError("token id " + std::to_string(t) + " is outside the vocabulary");
  }
  return out;
}

std::string Vocabulary::label(TokenId token) {
  if (token == kLinebreak) return "\\n";
  if (token == kAnchor) return "<ANC>";
  if (token == 0) return "<sp>";
  const TokenId one[1] = {token};
  return decode(one);
}

}  // namespace anchorkv::harness
