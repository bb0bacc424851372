// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "anchorkv/model/weights.hpp"

namespace anchorkv::analysis {

struct WovHead {
  std::size_t layer = 0;
  std::size_t head = 0;
  std::vector<double> eigenvalues;  // d_model values, descending
  double trace = 0.0;               // of the symmetrized product
  std::size_t nonzero = 0;
  double neg_fraction = 0.0;        // negatives among the nonzero eigenvalues
};

/// Eigenvalues of the symmetric part of each head's W_V^h W_O^h. Only the
/// symmetrized variant is computed; the raw product's complex spectrum is not.
struct WovReport {
  std::vector<WovHead> heads;
  std::string variant = "symmetric_part";

  std::string to_csv() const;          // layer,head,neg_fraction
  std::string eigenvalues_csv() const; // layer,head,index,eigenvalue
};

/// Eigenvalues with |lambda| <= kWovZeroTolerance * max|lambda| count as zero.
inline constexpr double kWovZeroTolerance = 1e-9;

WovReport wov_eigen_report(const model::ModelWeights& weights);

/// The d_model x d_model product W_V^h W_O^h of one head (row-vector
/// convention: a value row x W_V^h is mapped back by W_O^h).
numerics::Matrix head_ov_product(const model::ModelWeights& weights, std::size_t layer,
                                 std::size_t head);

}  // namespace anchorkv::analysis
