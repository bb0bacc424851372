// Copyright (C) 2026 The anchorkv Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorkv/numerics/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anchorkv/errors.hpp"

namespace anchorkv::numerics {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// One R x C block of c += a * b, accumulated in registers. Each output entry
// still sees c + a_0 b_0 + a_1 b_1 + ... in ascending k.
template <std::size_t R, std::size_t C>
inline void gemm_tile(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                      double* c, std::size_t ldc, std::size_t k) {
  double acc[R][C];
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < C; ++j) acc[r][j] = c[r * ldc + j];
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * ldb;
    for (std::size_t r = 0; r < R; ++r) {
      const double ap = a[r * lda + p];
      for (std::size_t j = 0; j < C; ++j) acc[r][j] += ap * bp[j];
    }
  }
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t j = 0; j < C; ++j) c[r * ldc + j] = acc[r][j];
}

template <std::size_t R>
void gemm_rows(const double* a, const double* b, double* c, std::size_t k, std::size_t n) {
  std::size_t j = 0;
  for (; j + 32 <= n; j += 32) gemm_tile<R, 32>(a, k, b + j, n, c + j, n, k);
  // Narrow tiles run one row at a time; compilers vectorize that shape better.
  for (; j + 16 <= n; j += 16)
    for (std::size_t r = 0; r < R; ++r) gemm_tile<1, 16>(a + r * k, k, b + j, n, c + r * n + j, n, k);
  for (; j + 8 <= n; j += 8)
    for (std::size_t r = 0; r < R; ++r) gemm_tile<1, 8>(a + r * k, k, b + j, n, c + r * n + j, n, k);
  for (; j < n; ++j) gemm_tile<R, 1>(a, k, b + j, n, c + j, n, k);
}

// Row-major c += a * b. Blocking only groups independent outputs, so every
// entry is computed identically whether `a` has one row or many: a single
// row pushed through here matches the same row of a batched product exactly.
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  constexpr std::size_t kRows = 4;
  std::size_t i = 0;
  for (; i + kRows <= m; i += kRows) gemm_rows<kRows>(a + i * k, b, c + i * n, k, n);
  for (; i < m; ++i) gemm_rows<1>(a + i * k, b, c + i * n, k, n);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::col_block(std::size_t begin, std::size_t count) const {
  if (begin + count > cols_) throw ShapeError("column block out of range for " + dims(*this));
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    std::copy_n(data_.data() + r * cols_ + begin, count, out.data_.data() + r * count);
  return out;
}

void Matrix::set_col_block(std::size_t begin, const Matrix& block) {
  if (block.rows_ != rows_ || begin + block.cols_ > cols_)
    throw ShapeError("column block " + dims(block) + " does not fit " + dims(*this));
  for (std::size_t r = 0; r < rows_; ++r)
    std::copy_n(block.data_.data() + r * block.cols_, block.cols_,
                data_.data() + r * cols_ + begin);
}

void Matrix::add_col_block(std::size_t begin, const Matrix& block) {
  if (block.rows_ != rows_ || begin + block.cols_ > cols_)
    throw ShapeError("column block " + dims(block) + " does not fit " + dims(*this));
  for (std::size_t r = 0; r < rows_; ++r) {
    double* dst = data_.data() + r * cols_ + begin;
    const double* src = block.data_.data() + r * block.cols_;
    for (std::size_t c = 0; c < block.cols_; ++c) dst[c] += src[c];
  }
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_)
    throw ShapeError("append_row width " + std::to_string(values.size()) + " != " +
                     std::to_string(cols_));
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void Matrix::keep_rows(std::span<const std::size_t> keep) {
  std::size_t out = 0;
  for (std::size_t r : keep) {
    if (r >= rows_) throw ShapeError("keep_rows index out of range");
    if (r != out) std::copy_n(data_.data() + r * cols_, cols_, data_.data() + out * cols_);
    ++out;
  }
  rows_ = out;
  data_.resize(rows_ * cols_);
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw ShapeError("cannot add " + dims(other) + " to " + dims(*this));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw ShapeError("cannot subtract " + dims(other) + " from " + dims(*this));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double scale) noexcept {
  for (double& v : data_) v *= scale;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul " + dims(a) + " * " + dims(b));
  Matrix c(a.rows(), b.cols());
  gemm_acc(a.storage().data(), b.storage().data(), c.storage().data(), a.rows(), a.cols(),
           b.cols());
  return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeError("matmul_bt " + dims(a) + " * (" + dims(b) + ")^T");
  return matmul(a, b.transposed());
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  matmul_at_acc(a, b, c);
  return c;
}

void matmul_at_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols())
    throw ShapeError("matmul_at (" + dims(a) + ")^T * " + dims(b) + " into " + dims(c));
  const Matrix at = a.transposed();
  gemm_acc(at.storage().data(), b.storage().data(), c.storage().data(), at.rows(), at.cols(),
           b.cols());
}

double frobenius_norm(const Matrix& m) noexcept {
  double s = 0.0;
  for (double v : m.storage()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("max_abs_diff " + dims(a) + " vs " + dims(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.storage()[i] - b.storage()[i]));
  return m;
}

}  // namespace anchorkv::numerics
