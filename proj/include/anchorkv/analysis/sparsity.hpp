// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "anchorkv/analysis/record.hpp"

namespace anchorkv::analysis {

/// Vectors up to this length use the exact double sum in gini().
inline constexpr std::size_t kGiniDoubleSumLimit = 512;

/// G = sum_i sum_j |w_i - w_j| / (2 n^2 mean). InputError on an empty or
/// all-zero vector or a negative entry.
double gini_double_sum(std::span<const double> w);
/// Same value from the sorted identity G = sum_i (2i - n - 1) w_(i) / (n sum w).
double gini_sorted(std::span<const double> w);
double gini(std::span<const double> w);

/// Sum of the two largest entries. InputError below two entries.
double top2_sum(std::span<const double> w);

/// Maps every token id to a class index.
struct TokenClasses {
  std::vector<std::string> names;
  std::vector<std::size_t> of_token;  // indexed by token id

  /// {linebreak, other}; the anchor token, when given, gets its own class.
  static TokenClasses linebreak_vs_other(std::size_t vocab_size, TokenId linebreak_id,
                                         TokenId anchor_id = -1);
};

struct MaxDistribution {
  std::vector<std::string> names;
  std::vector<std::size_t> counts;
  std::vector<double> ratios;
  std::size_t rows = 0;
};

/// For every attention row with at least one column at or beyond
/// `exclude_sinks`, classifies the token at the row's argmax over those
/// columns (ties go to the earliest position). Each head's row counts once.
MaxDistribution attention_max_distribution(std::span<const AttentionRecord> records,
                                           const TokenClasses& classes,
                                           std::size_t exclude_sinks);

struct SparsityReport {
  std::vector<double> gini;   // per layer
  std::vector<double> top2;   // per layer
  std::vector<std::size_t> rows;  // rows aggregated per layer
  MaxDistribution max_distribution;
  std::string aggregation;

  std::string to_csv() const;  // layer,gini,top2
  std::string to_json() const;
};

/// Per-layer means over every row of length >= 2 (the causal prefix 0..i of
/// row i, masked entries counted as zeros), across heads and records.
SparsityReport sparsity_report(std::span<const AttentionRecord> records,
                               const TokenClasses& classes, std::size_t exclude_sinks);

}  // namespace anchorkv::analysis
