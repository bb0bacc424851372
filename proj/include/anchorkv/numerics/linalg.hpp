// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "anchorkv/numerics/matrix.hpp"

namespace anchorkv::numerics {

/// Additive bias that drives a softmax entry to exactly zero in double
/// precision once the row maximum has been subtracted.
inline constexpr double kMaskedLogit = -1e9;

/// Numerically stable softmax of one row, in place.
void softmax_inplace(std::span<double> row) noexcept;

/// Row-wise softmax; each output row sums to one.
Matrix softmax_rows(const Matrix& x);

/// Mean-centred layer normalisation with a learned gain and no bias:
/// gain * (x - mean) / sqrt(var + eps), population variance.
std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               double eps);

/// Eigenvalues of a symmetric matrix in descending order, via cyclic Jacobi
/// rotations. Throws ShapeError for non-square or asymmetric input (tolerance
/// 1e-9) and ConvergenceError if 100 sweeps do not bring the off-diagonal
/// Frobenius norm below 1e-10.
std::vector<double> symmetric_eigenvalues(const Matrix& m);

/// (m + m^T) / 2
Matrix symmetric_part(const Matrix& m);

}  // namespace anchorkv::numerics
