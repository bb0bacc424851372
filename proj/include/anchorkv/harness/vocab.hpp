// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anchorkv/model/config.hpp"

namespace anchorkv::harness {

/// Character vocabulary of the toy model: printable ASCII 0x20..0x7e as ids
/// 0..94, then the linebreak and the anchor token.
struct Vocabulary {
  static constexpr std::size_t kPrintable = 95;
  static constexpr TokenId kLinebreak = 95;
  static constexpr TokenId kAnchor = 96;
  static constexpr std::size_t kSize = 97;

  /// InputError for characters outside the vocabulary (tabs, non-ASCII).
  static TokenId id_of(char c);
  static std::vector<TokenId> encode(std::string_view text);
  /// The anchor renders as "<ANC>".
  static std::string decode(std::span<const TokenId> tokens);
  /// Printable label for heatmaps: "\n" for the linebreak, "<ANC>", "<sp>".
  static std::string label(TokenId token);
};

}  // namespace anchorkv::harness
