// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>

#include "anchorkv/model/weights.hpp"

namespace anchorkv::model {

/// Layout, all integers little-endian:
///   "AKV1"
///   u32 config length, config JSON (UTF-8)
///   u32 tensor count
///   per tensor: u32 name length, name, u32 rows, u32 cols, rows*cols float64
/// Tensors appear in ModelWeights::for_each order.
void save_checkpoint(const ModelWeights& weights, std::ostream& out);
void save_checkpoint(const ModelWeights& weights, const std::string& path);

/// InputError on a bad magic, truncated data, or tensors that do not match
/// the stored config.
ModelWeights load_checkpoint(std::istream& in);
ModelWeights load_checkpoint(const std::string& path);

}  // namespace anchorkv::model
