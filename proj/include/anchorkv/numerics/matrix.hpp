// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace anchorkv::numerics {

/// Dense row-major matrix of doubles. Row vectors are 1xN matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  Matrix transposed() const;

  /// Copies columns [begin, begin + count) into a new rows x count matrix.
  Matrix col_block(std::size_t begin, std::size_t count) const;
  /// Writes `block` into columns starting at `begin`.
  void set_col_block(std::size_t begin, const Matrix& block);
  /// Accumulates `block` into columns starting at `begin`.
  void add_col_block(std::size_t begin, const Matrix& block);

  /// Appends a row; the matrix must be empty or have matching width.
  void append_row(std::span<const double> values);
  /// Keeps only the rows whose indices appear in `keep` (ascending).
  void keep_rows(std::span<const std::size_t> keep);

  void fill(double value);
  bool all_finite() const noexcept;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double scale) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

/// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// c = a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// c = a^T * b
Matrix matmul_at(const Matrix& a, const Matrix& b);
/// c += a^T * b, the accumulation form used for weight gradients.
void matmul_at_acc(const Matrix& a, const Matrix& b, Matrix& c);

double frobenius_norm(const Matrix& m) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace anchorkv::numerics
