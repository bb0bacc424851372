// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/cache/budget.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anchorkv/errors.hpp"

namespace anchorkv::cache {

BudgetReport budget_of(std::span<const std::size_t> retained_per_step, std::size_t total,
                       const CacheGeometry& geometry) {
  if (retained_per_step.empty()) throw InputError("budget_of: empty retention trace");
  if (total == 0) throw InputError("budget_of: total token count must be positive");
  BudgetReport r;
  r.total_tokens = total;
  r.retained_per_step.assign(retained_per_step.begin(), retained_per_step.end());
  r.peak_retained = *std::max_element(retained_per_step.begin(), retained_per_step.end());
  r.budget_percent = static_cast<double>(r.peak_retained) / static_cast<double>(total) * 100.0;
  r.bytes = estimate_cache_bytes(geometry.n_layers, std::max<std::size_t>(r.peak_retained, 1),
                                 geometry.d_model, geometry.bytes_per_float, geometry.batch);
  r.bytes_per_token = static_cast<double>(r.bytes) / static_cast<double>(total);
  return r;
}

std::string BudgetReport::to_csv() const {
  std::ostringstream out;
  out << "step,retained,budget_percent\n";
  for (std::size_t i = 0; i < retained_per_step.size(); ++i)
    out << i << ',' << retained_per_step[i] << ','
        << static_cast<double>(retained_per_step[i]) / static_cast<double>(total_tokens) * 100.0
        << '\n';
  return out.str();
}

std::string BudgetReport::to_json() const {
  nlohmann::json j;
  j["policy"] = policy;
  j["total_tokens"] = total_tokens;
  j["steps"] = retained_per_step.size();
  j["peak_retained"] = peak_retained;
  j["budget_percent"] = budget_percent;
  j["bytes"] = bytes;
  j["bytes_per_token"] = bytes_per_token;
  return j.dump(2);
}

std::uint64_t estimate_cache_bytes(std::uint64_t n_layers, std::uint64_t seq,
                                   std::uint64_t d_model, std::uint64_t bytes_per_float,
                                   std::uint64_t batch) {
  if (n_layers == 0 || seq == 0 || d_model == 0 || bytes_per_float == 0 || batch == 0)
    throw InputError("estimate_cache_bytes: every dimension must be positive");
  return 2 * n_layers * seq * d_model * bytes_per_float * batch;
}

double ratio_gb_per_token(double cache_gb, double generated_length) {
  if (!(generated_length > 0.0))
    throw InputError("ratio_gb_per_token: generated length must be positive");
  return cache_gb / generated_length;
}

}  // namespace anchorkv::cache
