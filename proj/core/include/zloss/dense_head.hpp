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

#ifndef ZLOSS_DENSE_HEAD_HPP_
#define ZLOSS_DENSE_HEAD_HPP_

#include <cstdint>
#include <iosfwd>

#include "zloss/common.hpp"
#include "zloss/losses.hpp"
#include "zloss/matrix.hpp"

namespace zloss {

/// Plain dense output layer o = W h. Works with every loss kind, costs
/// O(D d) per example, and doubles as the exactness oracle for the factored
/// layer (identical seed gives an identical initial W).
class DenseHead {
 public:
  DenseHead(std::size_t num_classes, std::size_t dim, double init_scale,
            std::uint64_t seed);

  struct StepResult {
    double value = 0.0;
    Vec input_grad;  // W^T g, computed before the update
    bool degenerate = false;
  };

  /// Forward + loss + input gradient + SGD step for a single example.
  /// eta = 0 leaves W untouched.
  StepResult step(std::span<const double> h, std::size_t target,
                  LossKind kind, const ZLossParams& params, double eta);

  Vec scores(std::span<const double> h) const;

  /// W -= eta g h^T for a precomputed dense gradient.
  void apply_dense_grad(std::span<const double> h, std::span<const double> g,
                        double eta);

  /// Applies a spherical gradient whose (alpha, beta, gamma) came from an
  /// earlier forward, rebuilding the o-dependent part against the current
  /// weights. Mirrors the factored layer's deferred minibatch updates.
  void apply_spherical_grad(std::span<const double> h, std::size_t target,
                            const SphericalGrad& grad, double eta);

  std::size_t num_classes() const { return weights_.rows(); }
  std::size_t dim() const { return weights_.cols(); }
  Matrix& weights() { return weights_; }
  const Matrix& weights() const { return weights_; }

  void save(std::ostream& os) const;
  static DenseHead load(std::istream& is);

 private:
  DenseHead() = default;
  Matrix weights_;
};

}  // namespace zloss

#endif  // ZLOSS_DENSE_HEAD_HPP_
