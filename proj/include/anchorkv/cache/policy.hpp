// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anchorkv/anchor/mask.hpp"
#include "anchorkv/model/config.hpp"

namespace anchorkv::cache {

enum class PolicyKind { kDense, kWindow, kStreaming, kHeavyHitter, kAnchor };

inline constexpr std::size_t kDefaultAnchorSinks = 4;

/// Static description of a KV retention policy.
struct PolicySpec {
  PolicyKind kind = PolicyKind::kDense;
  std::size_t window = 0;  // Window, Streaming
  std::size_t sinks = 0;   // Streaming, Anchor
  double fraction = 0.0;   // HeavyHitter
  TokenId linebreak_id = -1;
  TokenId anchor_id = -1;

  static PolicySpec dense();
  static PolicySpec window_of(std::size_t w);
  static PolicySpec streaming(std::size_t sinks, std::size_t w);
  static PolicySpec heavy_hitter(double fraction);
  static PolicySpec anchor(TokenId linebreak_id, TokenId anchor_id,
                           std::size_t sinks = kDefaultAnchorSinks);

  /// dense | window:W | streaming:S,W | h2o:F | anchor | anchor:S
  /// InputError on anything else.
  static PolicySpec parse(std::string_view text, TokenId linebreak_id, TokenId anchor_id);
  std::string to_string() const;

  bool needs_feedback() const noexcept { return kind == PolicyKind::kHeavyHitter; }
  bool plants_anchors() const noexcept { return kind == PolicyKind::kAnchor; }
};

/// Per-sequence retention state. Positions are admitted strictly in order;
/// each call returns the positions the query at that step may attend to,
/// which is also what stays cached afterwards.
class KvCachePolicy {
 public:
  explicit KvCachePolicy(PolicySpec spec);

  const PolicySpec& spec() const noexcept { return spec_; }

  /// Admits `step` (which must equal the number of positions seen so far)
  /// carrying `token`. HeavyHitter needs, for every step after the first,
  /// the previous step's attention mass aligned with the previously returned
  /// set; ProtocolError otherwise.
  const std::vector<std::size_t>& visible(std::size_t step, TokenId token,
                                          std::optional<std::span<const double>> feedback = {});

  const std::vector<std::size_t>& retained() const noexcept { return retained_; }
  std::size_t seen() const noexcept { return seen_; }
  const std::vector<std::size_t>& anchors() const noexcept { return anchors_; }

 private:
  void admit_heavy_hitter(std::size_t step, std::optional<std::span<const double>> feedback);

  PolicySpec spec_;
  std::size_t seen_ = 0;
  std::vector<std::size_t> retained_;
  std::vector<std::size_t> anchors_;
  std::vector<double> scores_;  // accumulated attention per position
};

/// Replays a policy over a token stream (already anchor-planted for the
/// Anchor policy) and returns the retained set after every step. ProtocolError
/// for policies that need attention feedback.
std::vector<std::vector<std::size_t>> simulate_policy(const PolicySpec& spec,
                                                      std::span<const TokenId> tokens);

/// The per-row visibility a policy induces, as an attention mask.
anchor::AttentionMask policy_mask(const PolicySpec& spec, std::span<const TokenId> tokens);

}  // namespace anchorkv::cache
