// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "anchorkv/model/config.hpp"
#include "anchorkv/numerics/rng.hpp"

namespace anchorkv::harness {

enum class CorpusStyle { kLines, kMembership };

struct CorpusOptions {
  /// Lines style: approximate tokens per sequence (sequences end on a line).
  std::size_t sequence_tokens = 192;
  /// Membership style: list lengths are drawn uniformly from this range.
  std::size_t min_list = 4;
  std::size_t max_list = 128;
};

using Sequence = std::vector<TokenId>;

/// Sequences totalling at least `size_tokens` tokens.
///
/// kLines: short assignment/print statements such as "b=a+3" or "print(b)", one
/// per line; later lines reuse variables defined earlier in the sequence.
/// kMembership: rendered needle tasks followed by the answer and a linebreak,
/// cycling with period 8 through six "in" and two "not in" tasks with
/// presence alternating, so answers alternate True and False.
std::vector<Sequence> make_corpus(numerics::Rng& rng, std::size_t size_tokens, CorpusStyle style,
                                  const CorpusOptions& options = {});

/// Characters of the needle template.
inline constexpr char kNeedle = '@';
inline constexpr char kAnswerTrue = 'T';
inline constexpr char kAnswerFalse = 'F';
/// Header line standing in for the instruction comment.
inline constexpr const char* kNeedleHeader = "#?";
/// Assert stubs: "needle in l ==" and "needle not in l ==".
inline constexpr const char* kStubIn = "+=";
inline constexpr const char* kStubNotIn = "-=";

enum class NeedleVariant { kIn, kNotIn };

struct NeedleTask {
  std::size_t n = 0;
  double depth = 0.0;
  TokenId needle = 0;
  std::vector<TokenId> items;   // the list, n entries
  std::size_t needle_index = 0; // round-half-up of depth * (n - 1)
  bool present = false;
  NeedleVariant variant = NeedleVariant::kIn;
  bool gold = false;            // the completed assert holds
  /// Header line, one item per line, then the assert stub awaiting T or F.
  std::vector<TokenId> prompt;
  /// Index in `prompt` of the needle's list slot (present or not).
  std::size_t needle_position = 0;

  TokenId answer_token() const;
};

/// The needle is a fixed token ('@'); distractors are random digits. When
/// absent, the needle's slot holds a distractor. InputError for n < 2 or
/// depth outside [0, 1].
NeedleTask make_needle(numerics::Rng& rng, std::size_t n, double depth, bool present,
                       NeedleVariant variant = NeedleVariant::kIn);

/// Per-target weights for a membership sequence: `answer_weight` on the
/// answer that follows an assert stub, `other_weight` elsewhere.
std::vector<double> membership_target_weights(std::span<const TokenId> tokens,
                                              double answer_weight = 1.0,
                                              double other_weight = 0.0);

}  // namespace anchorkv::harness
