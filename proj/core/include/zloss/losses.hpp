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

#ifndef ZLOSS_LOSSES_HPP_
#define ZLOSS_LOSSES_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "zloss/common.hpp"

namespace zloss {

enum class LossKind {
  kZLoss,       // (1/a) softplus(a (b - z_c)), spherical
  kMse,         // 0.5 sum_k (o_k - delta_kc)^2, spherical
  kTaylor,      // log-Taylor-softmax, spherical
  kLogSoftmax,  // -log softmax_c(o), dense only
  kCeSigmoid,   // softplus(-o_c) + sum_{k!=c} softplus(o_k), dense only
  kSz,          // Z-normalized log-softmax -(1/a) log softmax_c(a z), dense
};

/// Spherical losses are functions of (sum o, sum o^2, o_c) only and can be
/// trained through the factored output layer.
bool is_spherical(LossKind kind);

/// Parses "zloss", "mse", "taylor", "logsoftmax", "ce", "sz".
LossKind loss_kind_from_name(const std::string& name);
const char* loss_kind_name(LossKind kind);

/// Scale / shift hyperparameters of the Z-loss. `b` is ignored by the
/// Z-normalized log-softmax, which is shift-invariant.
struct ZLossParams {
  double a = 0.1;
  double b = 10.0;
};

/// The complete interface a spherical loss sees: q = sum_k o_k,
/// s_sq = sum_k o_k^2, the target pre-activation o_c, the output
/// dimension and the target index.
struct SphericalStats {
  double q = 0.0;
  double s_sq = 0.0;
  double o_c = 0.0;
  std::size_t dim = 0;
  std::size_t target = 0;
};

/// Partials of a spherical loss with respect to (q, s_sq, o_c). The full
/// dense gradient is reconstructed as g_k = alpha + 2 beta o_k + gamma [k==c].
struct SphericalGrad {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Per-example standardization z = (o - mu) / sigma across the output
/// dimensions. `degenerate` is set when sigma had to be floored (constant or
/// near-constant output vector).
struct Standardized {
  Vec z;
  double mu = 0.0;
  double sigma = 0.0;
  bool degenerate = false;
};

inline constexpr double kDefaultSigmaFloor = 1e-8;

/// Overflow-safe softplus: max(x, 0) + log1p(exp(-|x|)).
double softplus(double x);
/// Overflow-safe logistic sigmoid.
double sigmoid(double x);

/// Standardizes o across its dimensions. Requires length >= 2.
Standardized standardize(std::span<const double> o,
                         double sigma_floor = kDefaultSigmaFloor);

struct SphericalEval {
  double value = 0.0;
  SphericalGrad grad;
  bool degenerate = false;
};

/// Evaluates a spherical loss and its (alpha, beta, gamma) partials from
/// summary statistics alone. `params` is required for kZLoss.
SphericalEval spherical_eval(LossKind kind, const SphericalStats& stats,
                             const ZLossParams* params = nullptr,
                             double sigma_floor = kDefaultSigmaFloor);

/// Reconstructs the dense gradient from spherical partials:
/// g_k = alpha + 2 beta o_k + gamma [k == target].
Vec dense_grad_from_spherical(std::span<const double> o, std::size_t target,
                              const SphericalGrad& grad);

/// Summary statistics of a materialized output vector.
SphericalStats stats_from_outputs(std::span<const double> o,
                                  std::size_t target);

struct DenseEval {
  double value = 0.0;
  Vec grad;
  bool degenerate = false;
};

/// Evaluates any loss kind on a full output vector. Spherical kinds go
/// through stats -> spherical_eval -> dense_grad_from_spherical, so this is
/// also the reference path for the factored layer.
DenseEval dense_eval(LossKind kind, std::span<const double> o,
                     std::size_t target, const ZLossParams& params = {},
                     double sigma_floor = kDefaultSigmaFloor);

struct GradCheckResult {
  bool skipped_degenerate = false;
  double max_rel_error = 0.0;
};

/// Central-finite-difference check of the analytic gradient. Returns the
/// largest coordinate difference relative to the gradient's max-norm,
/// max_k |analytic_k - numeric_k| / max(||analytic||, ||numeric||, 1e-12).
/// Near-degenerate sigma (for the normalized losses) skips the check.
GradCheckResult grad_check(LossKind kind, std::span<const double> o,
                           std::size_t target, const ZLossParams& params,
                           double eps);

}  // namespace zloss

#endif  // ZLOSS_LOSSES_HPP_
