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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/test_util.hpp"
#include "zloss/matrix.hpp"
#include "zloss/rng.hpp"

using namespace zloss;

TEST_CASE("matvec against a hand example") {
  Matrix a(2, 3);
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(0, 2) = 3;
  a(1, 0) = -1;
  a(1, 1) = 0;
  a(1, 2) = 4;
  Vec x = {1, 1, 2};
  Vec out(2);
  matvec(a, x, out);
  CHECK(out[0] == doctest::Approx(9.0));
  CHECK(out[1] == doctest::Approx(7.0));

  Vec y = {1, 2};
  Vec out_t(3);
  matvec_transpose(a, y, out_t);
  CHECK(out_t[0] == doctest::Approx(-1.0));
  CHECK(out_t[1] == doctest::Approx(2.0));
  CHECK(out_t[2] == doctest::Approx(11.0));
}

TEST_CASE("matmul with identity is a no-op") {
  Rng rng(3);
  Matrix a(5, 5);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
  Matrix prod = matmul(a, Matrix::identity(5));
  CHECK(max_abs_diff(prod, a) == 0.0);
  prod = matmul(Matrix::identity(5), a);
  CHECK(max_abs_diff(prod, a) == 0.0);
}

TEST_CASE("quadratic form matches the naive double loop") {
  Rng rng(11);
  Matrix a(6, 6);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
  Vec x = testing::random_gaussian_vec(rng, 6);
  double expected = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) expected += x[i] * a(i, j) * x[j];
  CHECK(quadratic_form(a, x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("add_outer accumulates u v^T") {
  Matrix a(2, 2, 1.0);
  Vec u = {1, 2};
  Vec v = {3, 4};
  add_outer(a, 0.5, u, v);
  CHECK(a(0, 0) == doctest::Approx(1.0 + 1.5));
  CHECK(a(0, 1) == doctest::Approx(1.0 + 2.0));
  CHECK(a(1, 0) == doctest::Approx(1.0 + 3.0));
  CHECK(a(1, 1) == doctest::Approx(1.0 + 4.0));
}

TEST_CASE("relative frobenius diff") {
  Matrix a(2, 2);
  Matrix b(2, 2);
  a(0, 0) = 1.0;
  b(0, 0) = 1.0;
  CHECK(relative_frobenius_diff(a, b) == 0.0);
  a(1, 1) = 1e-9;
  CHECK(relative_frobenius_diff(a, b) == doctest::Approx(1e-9));
}

TEST_CASE("rng determinism and shuffle") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform01() == b.uniform01());
    CHECK(a.gaussian() == b.gaussian());
  }
  std::vector<int> v1 = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> v2 = v1;
  Rng s1(9);
  Rng s2(9);
  s1.shuffle(v1);
  s2.shuffle(v2);
  CHECK(v1 == v2);
}
