// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "anchorkv/cache/budget.hpp"
#include "anchorkv/cache/policy.hpp"
#include "anchorkv/model/weights.hpp"

namespace anchorkv::harness {

struct RuntimeReport {
  std::string policy;
  std::size_t prompt_len = 0;
  std::size_t gen_len = 0;
  std::size_t repeats = 0;
  double prefill_seconds = 0.0;  // median
  double decode_seconds = 0.0;   // median
  double throughput = 0.0;       // gen_len / decode_seconds
  cache::BudgetReport cache;     // from the last repeat

  static std::string csv_header();  // no trailing newline
  std::string csv_row() const;
};

struct BenchOptions {
  std::size_t repeats = 5;
  std::size_t warmup = 1;  // untimed runs before the measured ones
};

/// Prefills `prompt`, then greedily decodes gen_len tokens (each one a timed
/// decode step) on a monotonic clock. The first generated token comes from
/// the prefill logits; a planted anchor's extra step counts as decode time.
/// InputError for gen_len == 0 or repeats == 0; LengthError when prompt plus
/// generation would not fit in max_seq.
RuntimeReport bench_runtime(const model::ModelWeights& weights, const cache::PolicySpec& policy,
                            std::span<const TokenId> prompt, std::size_t gen_len,
                            const BenchOptions& options = {});

}  // namespace anchorkv::harness
