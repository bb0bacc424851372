// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "anchorkv/errors.hpp"

namespace anchorkv::numerics {

void softmax_inplace(std::span<double> row) noexcept {
  if (row.empty()) return;
  const double peak = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (double& v : row) {
    v = std::exp(v - peak);
    total += v;
  }
  const double inv = 1.0 / total;
  for (double& v : row) v *= inv;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix y = x;
  for (std::size_t r = 0; r < y.rows(); ++r) softmax_inplace(y.row(r));
  return y;
}

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gain,
                               double eps) {
  if (x.size() != gain.size())
    throw ShapeError("layer_norm: input width " + std::to_string(x.size()) + " != gain width " +
                     std::to_string(gain.size()));
  if (!(eps > 0.0)) throw InputError("layer_norm: eps must be positive");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv_std = 1.0 / std::sqrt(var + eps);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = gain[i] * (x[i] - mean) * inv_std;
  return y;
}

Matrix symmetric_part(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("symmetric_part of non-square matrix");
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

std::vector<double> symmetric_eigenvalues(const Matrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw ShapeError("symmetric_eigenvalues: matrix is not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-9)
        throw ShapeError("symmetric_eigenvalues: matrix is not symmetric at (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");

  constexpr int kMaxSweeps = 100;
  constexpr double kOffTolerance = 1e-10;

  Matrix a = m;
  // The input is symmetric only to 1e-9; rotate its exact symmetric part.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (m(i, j) + m(j, i));

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep <= kMaxSweeps; ++sweep) {
    if (off_norm() < kOffTolerance) break;
    if (sweep == kMaxSweeps) {
      throw ConvergenceError("symmetric_eigenvalues: no convergence after " +
                             std::to_string(kMaxSweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Stable rotation angle (Golub & Van Loan, sym.schur2).
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

}  // namespace anchorkv::numerics
