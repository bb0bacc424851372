// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "anchorkv/analysis/record.hpp"

namespace anchorkv::analysis {

/// One layer's attention as a grid: a header row of key labels, then one row
/// per query led by its label. Cells above the diagonal and masked cells are
/// empty. `head` unset averages the heads. `labels` default to token ids.
/// InputError for an out-of-range layer or head or a label count mismatch.
std::string export_heatmap(const AttentionRecord& record, std::size_t layer,
                           std::optional<std::size_t> head,
                           const std::vector<std::string>& labels = {});

/// The numeric grid behind export_heatmap; masked cells are 0.
numerics::Matrix heatmap_grid(const AttentionRecord& record, std::size_t layer,
                              std::optional<std::size_t> head);

}  // namespace anchorkv::analysis
