// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/cache/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "anchorkv/errors.hpp"

namespace anchorkv::cache {

namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw InputError("policy: cannot parse " + std::string(what) + " from '" + std::string(text) +
                     "'");
  return value;
}

// ceil(x) guarded against representation error, e.g. 0.3 * 10.
std::size_t ceil_count(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace

PolicySpec PolicySpec::dense() { return {}; }

PolicySpec PolicySpec::window_of(std::size_t w) {
  if (w == 0) throw InputError("window policy needs w >= 1");
  PolicySpec s;
  s.kind = PolicyKind::kWindow;
  s.window = w;
  return s;
}

PolicySpec PolicySpec::streaming(std::size_t sinks, std::size_t w) {
  if (w == 0) throw InputError("streaming policy needs w >= 1");
  PolicySpec s;
  s.kind = PolicyKind::kStreaming;
  s.sinks = sinks;
  s.window = w;
  return s;
}

PolicySpec PolicySpec::heavy_hitter(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InputError("heavy-hitter fraction must lie in (0, 1]");
  PolicySpec s;
  s.kind = PolicyKind::kHeavyHitter;
  s.fraction = fraction;
  return s;
}

PolicySpec PolicySpec::anchor(TokenId linebreak_id, TokenId anchor_id, std::size_t sinks) {
  if (linebreak_id < 0 || anchor_id < 0 || linebreak_id == anchor_id)
    throw InputError("anchor policy needs distinct linebreak and anchor ids");
  PolicySpec s;
  s.kind = PolicyKind::kAnchor;
  s.sinks = sinks;
  s.linebreak_id = linebreak_id;
  s.anchor_id = anchor_id;
  return s;
}

PolicySpec PolicySpec::parse(std::string_view text, TokenId linebreak_id, TokenId anchor_id) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view args = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  if (name == "dense" && args.empty()) return dense();
  if (name == "window" && !args.empty()) return window_of(parse_number<std::size_t>(args, "w"));
  if (name == "streaming") {
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) throw InputError("streaming policy expects S,W");
    return streaming(parse_number<std::size_t>(args.substr(0, comma), "sinks"),
                     parse_number<std::size_t>(args.substr(comma + 1), "w"));
  }
  if (name == "h2o" && !args.empty()) return heavy_hitter(parse_number<double>(args, "fraction"));
  if (name == "anchor") {
    const std::size_t sinks =
        args.empty() ? kDefaultAnchorSinks : parse_number<std::size_t>(args, "sinks");
    return anchor(linebreak_id, anchor_id, sinks);
  }
  throw InputError("unknown policy '" + std::string(text) +
                   "' (expected dense|window:w|streaming:s,w|h2o:f|anchor[:s])");
}

std::string PolicySpec::to_string() const {
  std::ostringstream out;
  switch (kind) {
    case PolicyKind::kDense: out << "dense"; break;
    case PolicyKind::kWindow: out << "window:" << window; break;
    case PolicyKind::kStreaming: out << "streaming:" << sinks << ',' << window; break;
    case PolicyKind::kHeavyHitter: out << "h2o:" << fraction; break;
    case PolicyKind::kAnchor: out << "anchor:" << sinks; break;
  }
  return out.str();
}

KvCachePolicy::KvCachePolicy(PolicySpec spec) : spec_(spec) {}

const std::vector<std::size_t>& KvCachePolicy::visible(
    std::size_t step, TokenId token, std::optional<std::span<const double>> feedback) {
  if (step != seen_)
    throw ProtocolError("policy expected step " + std::to_string(seen_) + ", got " +
                        std::to_string(step));

  switch (spec_.kind) {
    case PolicyKind::kDense:
      retained_.push_back(step);
      break;
    case PolicyKind::kWindow: {
      retained_.push_back(step);
      const std::size_t first = step + 1 > spec_.window ? step + 1 - spec_.window : 0;
      std::erase_if(retained_, [&](std::size_t p) { return p < first; });
      break;
    }
    case PolicyKind::kStreaming: {
      retained_.push_back(step);
      const std::size_t first = step + 1 > spec_.window ? step + 1 - spec_.window : 0;
      std::erase_if(retained_, [&](std::size_t p) { return p >= spec_.sinks && p < first; });
      break;
    }
    case PolicyKind::kHeavyHitter:
      admit_heavy_hitter(step, feedback);
      break;
    case PolicyKind::kAnchor: {
      // The line segment that is current for this query starts after the last
      // anchor strictly before it; everything in older segments except sinks
      // and anchors is gone.
      const std::size_t segment_begin = anchors_.empty() ? 0 : anchors_.back() + 1;
      if (token == spec_.anchor_id) anchors_.push_back(step);
      retained_.push_back(step);
      std::erase_if(retained_, [&](std::size_t p) {
        if (p < spec_.sinks || p >= segment_begin) return false;
        return !std::binary_search(anchors_.begin(), anchors_.end(), p);
      });
      break;
    }
  }
  ++seen_;
  return retained_;
}

void KvCachePolicy::admit_heavy_hitter(std::size_t step,
                                       std::optional<std::span<const double>> feedback) {
  if (step > 0) {
    if (!feedback)
      throw ProtocolError("heavy-hitter policy needs the previous step's attention at step " +
                          std::to_string(step));
    if (feedback->size() != retained_.size())
      throw ProtocolError("heavy-hitter feedback has " + std::to_string(feedback->size()) +
                          " entries for " + std::to_string(retained_.size()) +
                          " retained positions");
    for (std::size_t j = 0; j < retained_.size(); ++j) scores_[retained_[j]] += (*feedback)[j];
  }
  scores_.push_back(0.0);
  retained_.push_back(step);

  // Budget of ceil(f * seen) entries, half of it reserved for the most recent
  // positions, the rest for the highest accumulated attention. Evictions are
  // permanent.
  const std::size_t budget = std::max<std::size_t>(1, ceil_count(spec_.fraction * (step + 1)));
  const std::size_t recent = std::max<std::size_t>(1, (budget + 1) / 2);
  const std::size_t recent_begin = step + 1 > recent ? step + 1 - recent : 0;
  while (retained_.size() > budget) {
    auto victim = retained_.end();
    for (auto it = retained_.begin(); it != retained_.end() && *it < recent_begin; ++it)
      if (victim == retained_.end() || scores_[*it] < scores_[*victim]) victim = it;
    if (victim == retained_.end()) break;
    retained_.erase(victim);
  }
}

std::vector<std::vector<std::size_t>> simulate_policy(const PolicySpec& spec,
                                                      std::span<const TokenId> tokens) {
  if (spec.needs_feedback())
    throw ProtocolError("policy " + spec.to_string() + " needs attention feedback to simulate");
  KvCachePolicy policy(spec);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) out.push_back(policy.visible(i, tokens[i]));
  return out;
}

anchor::AttentionMask policy_mask(const PolicySpec& spec, std::span<const TokenId> tokens) {
  const auto sets = simulate_policy(spec, tokens);
  anchor::AttentionMask mask(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = 0; j < tokens.size(); ++j) mask.hide(i, j);
    for (std::size_t j : sets[i]) mask.show(i, j);
  }
  return mask;
}

}  // namespace anchorkv::cache
