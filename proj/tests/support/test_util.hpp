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

#ifndef ZLOSS_TESTS_SUPPORT_TEST_UTIL_HPP_
#define ZLOSS_TESTS_SUPPORT_TEST_UTIL_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "zloss/common.hpp"
#include "zloss/rng.hpp"

namespace zloss::testing {

inline Vec random_gaussian_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = rng.gaussian() * scale;
  return v;
}

inline Vec random_uniform_vec(Rng& rng, std::size_t n, double lo, double hi) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Exactly standardized vector (mean 0, variance 1) with z[target] = t.
/// |t| must stay below sqrt(D - 1). The remaining mass is spread over the
/// other coordinates in +/- pairs so both moments come out exact.
inline Vec standardized_with_target(std::size_t dim, std::size_t target,
                                    double t) {
  double d = static_cast<double>(dim);
  double mu0 = -t / (d - 1.0);
  Vec z(dim, mu0);
  z[target] = t;
  // need sum of squares = D; the flat part contributes t^2/(D-1)
  double residual = d - t * t - (d - 1.0) * mu0 * mu0;
  std::size_t pairs = (dim - 1) / 2;
  if (pairs > 0 && residual > 0.0) {
    double s = std::sqrt(residual / static_cast<double>(2 * pairs));
    std::size_t placed = 0;
    for (std::size_t k = 0; k < dim && placed < 2 * pairs; ++k) {
      if (k == target) continue;
      z[k] += (placed % 2 == 0) ? s : -s;
      ++placed;
    }
  }
  return z;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace zloss::testing

#endif  // ZLOSS_TESTS_SUPPORT_TEST_UTIL_HPP_
