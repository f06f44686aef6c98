// Copyright 2026 The zloss Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZLOSS_MATRIX_HPP_
#define ZLOSS_MATRIX_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace zloss {

/// Row-major dense matrix of doubles. Deliberately minimal: just the storage
/// plus the handful of kernels the output layers need.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void set_zero() { data_.assign(data_.size(), 0.0); }
  void set_identity() {
    set_zero();
    for (std::size_t i = 0; i < rows_ && i < cols_; ++i) (*this)(i, i) = 1.0;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---- vector kernels ----

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// ---- matrix kernels ----

/// out = A x
void matvec(const Matrix& a, std::span<const double> x, std::span<double> out);

/// out = A^T x  (row-major friendly: accumulates scaled rows)
void matvec_transpose(const Matrix& a, std::span<const double> x,
                      std::span<double> out);

/// A += alpha * u v^T
void add_outer(Matrix& a, double alpha, std::span<const double> u,
               std::span<const double> v);

/// C = A B
Matrix matmul(const Matrix& a, const Matrix& b);

/// x^T A x for square A.
double quadratic_form(const Matrix& a, std::span<const double> x);

// ---- norms and comparisons ----

double max_abs(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
/// ||a - ref||_F / ||ref||_F  (0 if ref is all zero and a == ref)
double relative_frobenius_diff(const Matrix& a, const Matrix& ref);

}  // namespace zloss

#endif  // ZLOSS_MATRIX_HPP_
