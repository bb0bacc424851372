// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace anchorkv::cache {

/// Dimensions that turn a retained-position count into bytes.
struct CacheGeometry {
  std::size_t n_layers = 1;
  std::size_t d_model = 1;
  std::size_t bytes_per_float = 8;
  std::size_t batch = 1;
};

/// Logical KV retention over one sequence.
struct BudgetReport {
  std::size_t total_tokens = 0;
  std::vector<std::size_t> retained_per_step;
  std::size_t peak_retained = 0;
  double budget_percent = 0.0;  // peak_retained / total_tokens * 100
  std::uint64_t bytes = 0;      // cache size at the peak
  double bytes_per_token = 0.0;
  std::string policy;

  /// step,retained,budget_percent
  std::string to_csv() const;
  /// Summary with peak and byte fields.
  std::string to_json() const;
};

/// `total` is the token count the budget is measured against (planted
/// anchors excluded). InputError on an empty trace or zero total.
BudgetReport budget_of(std::span<const std::size_t> retained_per_step, std::size_t total,
                       const CacheGeometry& geometry = {});

/// 2 (K and V) x layers x seq x d_model x bytes_per_float x batch.
/// InputError if any argument is zero.
std::uint64_t estimate_cache_bytes(std::uint64_t n_layers, std::uint64_t seq,
                                   std::uint64_t d_model, std::uint64_t bytes_per_float,
                                   std::uint64_t batch);

/// Cache gigabytes per generated token. InputError for a non-positive length.
double ratio_gb_per_token(double cache_gb, double generated_length);

}  // namespace anchorkv::cache
