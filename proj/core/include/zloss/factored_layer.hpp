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

#ifndef ZLOSS_FACTORED_LAYER_HPP_
#define ZLOSS_FACTORED_LAYER_HPP_

#include <cstdint>
#include <iosfwd>

#include "zloss/common.hpp"
#include "zloss/losses.hpp"
#include "zloss/matrix.hpp"

namespace zloss {

struct FactoredLayerConfig {
  double init_scale = 0.1;
  /// Refactorize every this many updates; 0 disables the periodic trigger.
  std::size_t refactor_period = 512;
  /// Refactorize when the cheap condition estimate of U exceeds this.
  double cond_limit = 1e6;
};

// Output layer W h for a spherical loss, with the D x d weight matrix held
// as
//
//     W_eff = (V_store + 1 omega^T) U,
//
// together with U^-1 and the summary statistics
//
//     v_bar = V_eff^T 1,   G = V_eff^T V_eff,   V_eff = V_store + 1 omega^T.
//
// A spherical loss only needs (q, s_sq, o_c) from the forward pass:
//
//     h_hat = U h,  o_c = V_eff[c] . h_hat,  q = v_bar . h_hat,
//     s_sq  = h_hat^T G h_hat,
//
// all O(d^2). The dense SGD step W -= eta (alpha 1 + 2 beta W h + gamma e_c)
// h^T splits into a multiplicative part absorbed by U (rank-1, with U^-1
// maintained by Sherman-Morrison) and two sparse row updates on V_eff: the
// target row and the global offset omega, which carries the alpha 1 h^T term
// for all D rows at O(d) cost. Every step is therefore O(d^2), independent
// of the number of classes.
//
// U and U^-1 drift apart in floating point; refactorize() absorbs U and
// omega back into V_store (O(D d^2)) and restores them to the identity
// without changing W_eff.
class FactoredLayer {
 public:
  FactoredLayer(std::size_t num_classes, std::size_t dim, std::uint64_t seed,
                FactoredLayerConfig config = {});

  struct ForwardCache {
    Vec h;
    Vec h_hat;            // U h at forward time
    Vec target_row_eff;   // V_store[c] + omega at forward time
    SphericalStats stats;
    std::uint64_t version = 0;
  };

  /// Forward statistics for one example, O(d^2).
  ForwardCache forward(std::span<const double> h, std::size_t target) const;

  /// dL/dh = U^T (alpha v_bar + 2 beta G h_hat + gamma v_c), O(d^2).
  /// Throws StaleCacheError if the layer changed since the forward pass.
  Vec input_grad(const ForwardCache& cache, const SphericalGrad& grad) const;

  /// One exact SGD step, O(d^2). Throws SingularUpdateError when the
  /// Sherman-Morrison denominator 1 - 2 eta beta ||h||^2 is within 1e-8 of
  /// zero; the caller decides whether to refactorize-and-retry or shrink
  /// eta. Throws StaleCacheError on a stale cache.
  void sgd_update(const ForwardCache& cache, const SphericalGrad& grad,
                  double eta);

  /// Minibatch path: same update, but from a gradient computed against the
  /// pre-batch weights (forward caches of earlier examples in the batch are
  /// intentionally stale). Recomputes U h against the current U.
  void sgd_update_deferred(std::span<const double> h, std::size_t target,
                           const SphericalGrad& grad, double eta);

  /// Full score vector W_eff h, O(D d). Evaluation only.
  Vec full_scores(std::span<const double> h) const;

  /// (V_store + 1 omega^T) U, O(D d^2). Test and checkpoint use.
  Matrix materialize() const;

  /// Absorbs U and omega into V_store; W_eff is unchanged.
  void refactorize();

  struct Integrity {
    double uinv_drift = 0.0;   // ||U U_inv - I||_max
    double vbar_drift = 0.0;   // max-norm deviation vs recomputed v_bar
    double g_drift = 0.0;      // max-norm deviation vs recomputed G
    double cond_estimate = 1.0;
  };
  Integrity integrity_check() const;

  /// Ratio of largest to smallest column norm of U; cheap conditioning proxy.
  double cond_estimate() const;

  std::size_t num_classes() const { return num_classes_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t version() const { return version_; }
  std::size_t steps() const { return step_count_; }
  const FactoredLayerConfig& config() const { return config_; }

  /// Checkpoint: refactorizes, then writes config plus the materialized
  /// weights. Loading reconstructs V_store = W_eff with U = I.
  void save(std::ostream& os);
  static FactoredLayer load(std::istream& is);

 private:
  FactoredLayer() = default;
  void recompute_summaries();
  void bump_version();

  std::size_t num_classes_ = 0;
  std::size_t dim_ = 0;
  FactoredLayerConfig config_;
  Matrix v_store_;  // D x d
  Vec omega_;       // global row offset
  Matrix u_;        // d x d
  Matrix u_inv_;    // d x d
  Vec v_bar_;       // V_eff^T 1
  Matrix g_;        // V_eff^T V_eff
  std::size_t step_count_ = 0;
  std::uint64_t version_ = 0;
};

}  // namespace zloss

#endif  // ZLOSS_FACTORED_LAYER_HPP_
