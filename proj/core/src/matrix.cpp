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

#include "zloss/matrix.hpp"

#include <cassert>
#include <cmath>

namespace zloss {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void matvec(const Matrix& a, std::span<const double> x,
            std::span<double> out) {
  assert(x.size() == a.cols() && out.size() == a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
}

void matvec_transpose(const Matrix& a, std::span<const double> x,
                      std::span<double> out) {
  assert(x.size() == a.rows() && out.size() == a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) axpy(x[i], a.row(i), out);
}

void add_outer(Matrix& a, double alpha, std::span<const double> u,
               std::span<const double> v) {
  assert(u.size() == a.rows() && v.size() == a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) axpy(alpha * u[i], v, a.row(i));
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    auto ai = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) axpy(ai[k], b.row(k), ci);
  }
  return c;
}

double quadratic_form(const Matrix& a, std::span<const double> x) {
  assert(a.rows() == a.cols() && x.size() == a.rows());
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += x[i] * dot(a.row(i), x);
  return s;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data()[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows() && a.cols() == b.cols());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

double relative_frobenius_diff(const Matrix& a, const Matrix& ref) {
  assert(a.rows() == ref.rows() && a.cols() == ref.cols());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a.data()[i] - ref.data()[i];
    num += d * d;
    den += ref.data()[i] * ref.data()[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::sqrt(num);
  return std::sqrt(num / den);
}

}  // namespace zloss
