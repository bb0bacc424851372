// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/harness/corpus.hpp"

#include <cmath>
#include <string>

#include "anchorkv/errors.hpp"
#include "anchorkv/harness/vocab.hpp"

namespace anchorkv::harness {

namespace {

using numerics::Rng;

char pick_char(Rng& rng, char first, std::size_t count) {
  return static_cast<char>(first + static_cast<char>(rng.below(count)));
}

std::string literal(Rng& rng) {
  const auto v = rng.below(100);
  return std::to_string(v);
}

/// One statement of the lines corpus. `defined` holds variables assigned so
/// far; expressions and prints only use those.
std::string statement(Rng& rng, std::string& defined) {
  const double u = rng.uniform();
  if (defined.empty() || u < 0.3) {
    const char v = pick_char(rng, 'a', 26);
    if (defined.find(v) == std::string::npos) defined += v;
    return std::string(1, v) + "=" + literal(rng);
  }
  auto var = [&] { return defined[rng.below(defined.size())]; };
  if (u < 0.75) {
    static constexpr char kOps[] = {'+', '-', '*'};
    const char target = rng.coin() ? var() : pick_char(rng, 'a', 26);
    std::string rhs(1, var());
    rhs += kOps[rng.below(3)];
    rhs += rng.coin() ? std::string(1, var()) : std::to_string(rng.below(10));
    if (defined.find(target) == std::string::npos) defined += target;
    return std::string(1, target) + "=" + rhs;
  }
  return std::string("print(") + var() + ")";
}

std::vector<TokenId> lines_sequence(Rng& rng, std::size_t target) {
  std::string text;
  std::string defined;
  while (text.size() < target) {
    text += statement(rng, defined);
    text += '\n';
  }
  return Vocabulary::encode(text);
}

}  // namespace

TokenId NeedleTask::answer_token() const {
  return Vocabulary::id_of(gold ? kAnswerTrue : kAnswerFalse);
}

NeedleTask make_needle(Rng& rng, std::size_t n, double depth, bool present,
                       NeedleVariant variant) {
  if (n < 2) throw InputError("make_needle: list length must be at least 2");
  if (!(depth >= 0.0 && depth <= 1.0)) throw InputError("make_needle: depth must lie in [0, 1]");
  NeedleTask task;
  task.n = n;
  task.depth = depth;
  task.present = present;
  task.variant = variant;
  task.gold = present == (variant == NeedleVariant::kIn);
  task.needle = Vocabulary::id_of(kNeedle);
  task.needle_index =
      static_cast<std::size_t>(std::floor(depth * static_cast<double>(n - 1) + 0.5));
  task.items.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    task.items.push_back(Vocabulary::id_of(pick_char(rng, '0', 10)));
  if (present) task.items[task.needle_index] = task.needle;

  auto& p = task.prompt;
  p = Vocabulary::encode(kNeedleHeader);
  p.push_back(Vocabulary::kLinebreak);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == task.needle_index) task.needle_position = p.size();
    p.push_back(task.items[i]);
    p.push_back(Vocabulary::kLinebreak);
  }
  const auto stub = Vocabulary::encode(variant == NeedleVariant::kIn ? kStubIn : kStubNotIn);
  p.insert(p.end(), stub.begin(), stub.end());
  return task;
}

std::vector<Sequence> make_corpus(Rng& rng, std::size_t size_tokens, CorpusStyle style,
                                  const CorpusOptions& options) {
  if (size_tokens == 0) throw InputError("make_corpus: size must be at least 1 token");
  std::vector<Sequence> out;
  std::size_t total = 0;
  if (style == CorpusStyle::kLines) {
    if (options.sequence_tokens == 0) throw InputError("make_corpus: sequence_tokens must be positive");
    while (total < size_tokens) {
      out.push_back(lines_sequence(rng, options.sequence_tokens));
      total += out.back().size();
    }
    return out;
  }
  if (options.min_list < 2 || options.max_list < options.min_list)
    throw InputError("make_corpus: list length range must satisfy 2 <= min <= max");
  while (total < size_tokens) {
    const std::size_t n = options.min_list + rng.below(options.max_list - options.min_list + 1);
    // Three "in" tasks per "not in" one; presence alternates within each, so
    // answers stay balanced while presence alone already predicts the answer
    // of most items (a balanced mix makes the answer an XOR with no first-order
    // signal, and training stalls at chance).
    const std::size_t k = out.size() % 8;
    NeedleTask task = make_needle(rng, n, rng.uniform(), k % 2 == 0,
                                  k < 6 ? NeedleVariant::kIn : NeedleVariant::kNotIn);
    Sequence seq = std::move(task.prompt);
    seq.push_back(task.answer_token());
    seq.push_back(Vocabulary::kLinebreak);
    total += seq.size();
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<double> membership_target_weights(std::span<const TokenId> tokens,
                                              double answer_weight, double other_weight) {
  if (tokens.size() < 2) return {};
  std::vector<double> w(tokens.size() - 1, other_weight);
  // The stubs end in '=' and nothing else in the template does.
  const TokenId stub_end = Vocabulary::id_of('=');
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i)
    if (tokens[i] == stub_end) w[i] = answer_weight;
  return w;
}

}  // namespace anchorkv::harness
