// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/harness/bench.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <vector>

#include "anchorkv/errors.hpp"
#include "anchorkv/model/decode.hpp"
#include "anchorkv/model/forward.hpp"

namespace anchorkv::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Run {
  double prefill = 0.0;
  double decode = 0.0;
  cache::BudgetReport cache;
};

Run run_once(const model::ModelWeights& weights, const cache::PolicySpec& policy,
             std::span<const TokenId> prompt, std::size_t gen_len) {
  Run run;
  model::DecodeSession session(weights, policy);
  const TokenId anchor_id = weights.config.anchor_token_id;
  auto start = Clock::now();
  TokenId next = model::greedy_token(session.prefill(prompt), anchor_id);
  run.prefill = seconds_since(start);
  start = Clock::now();
  for (std::size_t i = 0; i < gen_len; ++i)
    next = model::greedy_token(session.feed(next), anchor_id);
  run.decode = seconds_since(start);
  run.cache = session.budget();
  return run;
}

}  // namespace

std::string RuntimeReport::csv_header() {
  return "policy,prompt_len,gen_len,repeats,prefill_seconds,decode_seconds,throughput,"
         "peak_retained,budget_percent";
}

std::string RuntimeReport::csv_row() const {
  std::ostringstream out;
  out.precision(9);
  out << policy << ',' << prompt_len << ',' << gen_len << ',' << repeats << ',' << prefill_seconds
      << ',' << decode_seconds << ',' << throughput << ',' << cache.peak_retained << ','
      << cache.budget_percent;
  return out.str();
}

RuntimeReport bench_runtime(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                            std::span<const TokenId> prompt, std::size_t gen_len,
                            const BenchOptions& options) {
  if (gen_len == 0) throw InputError("bench: gen_len must be at least 1");
  if (options.repeats == 0) throw InputError("bench: repeats must be at least 1");
  if (prompt.empty()) throw InputError("bench: empty prompt");
  // Worst case every token is a linebreak followed by a planted anchor.
  const std::size_t factor = policy.plants_anchors() ? 2 : 1;
  if (factor * (prompt.size() + gen_len) > weights.config.max_seq)
    throw LengthError("bench: prompt plus generation may exceed max_seq " +
                      std::to_string(weights.config.max_seq));

  for (std::size_t i = 0; i < options.warmup; ++i) run_once(weights, policy, prompt, gen_len);
  std::vector<double> prefill, decode;
  RuntimeReport report;
  for (std::size_t i = 0; i < options.repeats; ++i) {
    Run run = run_once(weights, policy, prompt, gen_len);
    prefill.push_back(run.prefill);
    decode.push_back(run.decode);
    report.cache = std::move(run.cache);
  }
  report.policy = policy.to_string();
  report.prompt_len = prompt.size();
  report.gen_len = gen_len;
  report.repeats = options.repeats;
  report.prefill_seconds = median(prefill);
  report.decode_seconds = median(decode);
  report.throughput = static_cast<double>(gen_len) / report.decode_seconds;
  return report;
}

}  // namespace anchorkv::harness
