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

#include "zloss/losses.hpp"

#include <algorithm>
#include <cmath>

namespace zloss {

bool is_spherical(LossKind kind) {
  switch (kind) {
    case LossKind::kZLoss:
    case LossKind::kMse:
    case LossKind::kTaylor:
      return true;
    default:
      return false;
  }
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "zloss") return LossKind::kZLoss;
  if (name == "mse") return LossKind::kMse;
  if (name == "taylor") return LossKind::kTaylor;
  if (name == "logsoftmax") return LossKind::kLogSoftmax;
  if (name == "ce") return LossKind::kCeSigmoid;
  if (name == "sz") return LossKind::kSz;
  throw ConfigError("unknown loss kind: " + name);
}

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kZLoss:
      return "zloss";
    case LossKind::kMse:
      return "mse";
    case LossKind::kTaylor:
      return "taylor";
    case LossKind::kLogSoftmax:
      return "logsoftmax";
    case LossKind::kCeSigmoid:
      return "ce";
    case LossKind::kSz:
      return "sz";
  }
  return "?";
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// mu, sigma and the degeneracy flag from (q, s_sq, D). Variance is clamped
// at zero: roundoff can push s_sq/D - mu^2 slightly negative.
struct Moments {
  double mu;
  double sigma;
  bool degenerate;
};

Moments moments(double q, double s_sq, std::size_t dim, double sigma_floor) {
  double mu = q / static_cast<double>(dim);
  double var = std::max(s_sq / static_cast<double>(dim) - mu * mu, 0.0);
  double sigma = std::sqrt(var);
  bool degenerate = sigma < sigma_floor;
  if (degenerate) sigma = sigma_floor;
  return {mu, sigma, degenerate};
}

void check_stats(const SphericalStats& stats) {
  if (stats.dim < 2) throw DataError("spherical stats need dim >= 2");
  if (stats.target >= stats.dim)
    throw DataError("target index out of range");
}

}  // namespace

Standardized standardize(std::span<const double> o, double sigma_floor) {
  if (o.size() < 2) throw DataError("standardize needs at least 2 outputs");
  if (sigma_floor <= 0.0) throw ConfigError("sigma floor must be positive");
  double q = 0.0;
  double s_sq = 0.0;
  for (double v : o) {
    q += v;
    s_sq += v * v;
  }
  Moments m = moments(q, s_sq, o.size(), sigma_floor);
  Standardized out;
  out.mu = m.mu;
  out.sigma = m.sigma;
  out.degenerate = m.degenerate;
  out.z.resize(o.size());
  for (std::size_t k = 0; k < o.size(); ++k) out.z[k] = (o[k] - m.mu) / m.sigma;
  return out;
}

SphericalEval spherical_eval(LossKind kind, const SphericalStats& stats,
                             const ZLossParams* params, double sigma_floor) {
  check_stats(stats);
  SphericalEval out;
  double d = static_cast<double>(stats.dim);
  switch (kind) {
    case LossKind::kZLoss: {
      if (params == nullptr)
        throw ConfigError("zloss requires (a, b) parameters");
      if (params->a <= 0.0) throw ConfigError("zloss parameter a must be > 0");
      Moments m = moments(stats.q, stats.s_sq, stats.dim, sigma_floor);
      out.degenerate = m.degenerate;
      double z_c = (stats.o_c - m.mu) / m.sigma;
      double t = params->a * (params->b - z_c);
      out.value = softplus(t) / params->a;
      // dL/dz_c = -sigmoid(a (b - z_c)); chain rule through
      // mu = q/D and sigma^2 = s_sq/D - mu^2 gives the partials below.
      // The printed closed forms in the source material disagree with
      // finite differences for the k != c component; these are validated
      // against central differences instead.
      double g_z = -sigmoid(t);
      out.grad.alpha =
          g_z / (d * m.sigma) * (z_c * m.mu / m.sigma - 1.0);
      out.grad.beta = -g_z * z_c / (2.0 * d * m.sigma * m.sigma);
      out.grad.gamma = g_z / m.sigma;
      break;
    }
    case LossKind::kMse: {
      // 0.5 sum (o_k - delta_kc)^2 = 0.5 (s_sq - 2 o_c + 1)
      out.value = 0.5 * (stats.s_sq - 2.0 * stats.o_c + 1.0);
      out.grad.alpha = 0.0;
      out.grad.beta = 0.5;
      out.grad.gamma = -1.0;
      break;
    }
    case LossKind::kTaylor: {
      // Normalizer Z = sum_k (1 + o_k + o_k^2/2) = D + q + s_sq/2 and
      // n_c = 1 + o_c + o_c^2/2; both are strictly positive.
      double z = d + stats.q + 0.5 * stats.s_sq;
      double n_c = 1.0 + stats.o_c + 0.5 * stats.o_c * stats.o_c;
      out.value = std::log(z) - std::log(n_c);
      out.grad.alpha = 1.0 / z;
      out.grad.beta = 0.5 / z;
      out.grad.gamma = -(1.0 + stats.o_c) / n_c;
      break;
    }
    default:
      throw ConfigError(std::string(loss_kind_name(kind)) +
                        " is not a spherical loss");
  }
  return out;
}

Vec dense_grad_from_spherical(std::span<const double> o, std::size_t target,
                              const SphericalGrad& grad) {
  if (target >= o.size()) throw DataError("target index out of range");
  Vec g(o.size());
  for (std::size_t k = 0; k < o.size(); ++k)
    g[k] = grad.alpha + 2.0 * grad.beta * o[k];
  g[target] += grad.gamma;
  return g;
}

SphericalStats stats_from_outputs(std::span<const double> o,
                                  std::size_t target) {
  if (target >= o.size()) throw DataError("target index out of range");
  SphericalStats s;
  s.dim = o.size();
  s.target = target;
  for (double v : o) {
    s.q += v;
    s.s_sq += v * v;
  }
  s.o_c = o[target];
  return s;
}

namespace {

DenseEval dense_eval_logsoftmax(std::span<const double> o,
                                std::size_t target) {
  DenseEval out;
  double mx = *std::max_element(o.begin(), o.end());
  double sum = 0.0;
  for (double v : o) sum += std::exp(v - mx);
  double lse = mx + std::log(sum);
  out.value = lse - o[target];
  out.grad.resize(o.size());
  for (std::size_t k = 0; k < o.size(); ++k)
    out.grad[k] = std::exp(o[k] - lse);
  out.grad[target] -= 1.0;
  return out;
}

DenseEval dense_eval_ce_sigmoid(std::span<const double> o,
                                std::size_t target) {
  DenseEval out;
  out.grad.resize(o.size());
  out.value = softplus(-o[target]);
  for (std::size_t k = 0; k < o.size(); ++k) {
    if (k != target) out.value += softplus(o[k]);
    out.grad[k] = sigmoid(o[k]);
  }
  out.grad[target] -= 1.0;
  return out;
}

DenseEval dense_eval_sz(std::span<const double> o, std::size_t target,
                        const ZLossParams& params, double sigma_floor) {
  if (params.a <= 0.0) throw ConfigError("sz parameter a must be > 0");
  DenseEval out;
  Standardized st = standardize(o, sigma_floor);
  out.degenerate = st.degenerate;
  std::size_t d = o.size();
  // softmax over the scaled z-scores
  Vec p(d);
  double mx = params.a * st.z[0];
  for (std::size_t k = 1; k < d; ++k) mx = std::max(mx, params.a * st.z[k]);
  double sum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    p[k] = std::exp(params.a * st.z[k] - mx);
    sum += p[k];
  }
  double lse = mx + std::log(sum);
  for (std::size_t k = 0; k < d; ++k) p[k] = std::exp(params.a * st.z[k] - lse);
  out.value = (lse - params.a * st.z[target]) / params.a;
  // dL/dz = p - e_c, pushed back through the standardization. With
  // u = p - e_c (which sums to zero) this collapses to
  //   dL/do_k = (u_k - z_k (u . z) / D) / sigma.
  Vec u = p;
  u[target] -= 1.0;
  double uz = 0.0;
  for (std::size_t k = 0; k < d; ++k) uz += u[k] * st.z[k];
  out.grad.resize(d);
  for (std::size_t k = 0; k < d; ++k)
    out.grad[k] = (u[k] - st.z[k] * uz / static_cast<double>(d)) / st.sigma;
  return out;
}

}  // namespace

DenseEval dense_eval(LossKind kind, std::span<const double> o,
                     std::size_t target, const ZLossParams& params,
                     double sigma_floor) {
  if (o.size() < 2) throw DataError("dense_eval needs at least 2 outputs");
  if (target >= o.size()) throw DataError("target index out of range");
  switch (kind) {
    case LossKind::kLogSoftmax:
      return dense_eval_logsoftmax(o, target);
    case LossKind::kCeSigmoid:
      return dense_eval_ce_sigmoid(o, target);
    case LossKind::kSz:
      return dense_eval_sz(o, target, params, sigma_floor);
    default: {
      SphericalStats stats = stats_from_outputs(o, target);
      SphericalEval se = spherical_eval(kind, stats, &params, sigma_floor);
      DenseEval out;
      out.value = se.value;
      out.degenerate = se.degenerate;
      out.grad = dense_grad_from_spherical(o, target, se.grad);
      return out;
    }
  }
}

GradCheckResult grad_check(LossKind kind, std::span<const double> o,
                           std::size_t target, const ZLossParams& params,
                           double eps) {
  if (eps <= 0.0) throw ConfigError("grad_check eps must be positive");
  GradCheckResult result;
  bool normalized = kind == LossKind::kZLoss || kind == LossKind::kSz;
  if (normalized) {
    Standardized st = standardize(o);
    // A perturbation of size eps moves sigma by at most ~eps; stay clear of
    // the floor so the loss is smooth across the stencil.
    if (st.sigma < 10.0 * (kDefaultSigmaFloor + eps)) {
      result.skipped_degenerate = true;
      return result;
    }
  }
  DenseEval analytic = dense_eval(kind, o, target, params);
  Vec probe(o.begin(), o.end());
  Vec numeric(o.size());
  double scale = 0.0;
  for (std::size_t k = 0; k < o.size(); ++k) {
    double saved = probe[k];
    probe[k] = saved + eps;
    double up = dense_eval(kind, probe, target, params).value;
    probe[k] = saved - eps;
    double down = dense_eval(kind, probe, target, params).value;
    probe[k] = saved;
    numeric[k] = (up - down) / (2.0 * eps);
    scale = std::max({scale, std::fabs(analytic.grad[k]),
                      std::fabs(numeric[k])});
  }
  // The difference is measured against the gradient's max-norm rather than
  // per coordinate: the central-difference estimate carries an absolute
  // noise floor of about ulp(|L|)/(2 eps), so a per-coordinate ratio at a
  // zero crossing of the gradient reports that noise instead of anything
  // about the analytic formula.
  double denom = std::max(scale, 1e-12);
  for (std::size_t k = 0; k < o.size(); ++k)
    result.max_rel_error =
        std::max(result.max_rel_error,
                 std::fabs(analytic.grad[k] - numeric[k]) / denom);
  return result;
}

}  // namespace zloss
