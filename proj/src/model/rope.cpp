// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/model/rope.hpp"

#include <cmath>
#include <string>

#include "anchorkv/errors.hpp"

namespace anchorkv::model {

RotaryFrequencies::RotaryFrequencies(std::size_t head_dim, double base) {
  if (head_dim % 2 != 0)
    throw ConfigError("rotary embedding needs an even head dimension, got " +
                      std::to_string(head_dim));
  inv_freq_.resize(head_dim / 2);
  for (std::size_t t = 0; t < inv_freq_.size(); ++t)
    inv_freq_[t] =
        std::pow(base, -2.0 * static_cast<double>(t) / static_cast<double>(head_dim));
}

void RotaryFrequencies::rotate(std::span<double> x, std::int64_t position) const {
  if (x.size() != head_dim())
    throw ShapeError("rope: vector width " + std::to_string(x.size()) + " != head dim " +
                     std::to_string(head_dim()));
  if (position == 0) return;
  const double pos = static_cast<double>(position);
  for (std::size_t t = 0; t < inv_freq_.size(); ++t) {
    const double angle = pos * inv_freq_[t];
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double a = x[2 * t];
    const double b = x[2 * t + 1];
    x[2 * t] = c * a - s * b;
    x[2 * t + 1] = s * a + c * b;
  }
}

void apply_rope_inplace(std::span<double> x, std::int64_t position, double base) {
  RotaryFrequencies(x.size(), base).rotate(x, position);
}

std::vector<double> apply_rope(std::span<const double> x, std::int64_t position, double base) {
  std::vector<double> y(x.begin(), x.end());
  apply_rope_inplace(y, position, base);
  return y;
}

}  // namespace anchorkv::model
