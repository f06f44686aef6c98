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

#include "zloss/factored_layer.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "zloss/io.hpp"
#include "zloss/rng.hpp"

namespace zloss {

namespace {
constexpr double kSingularGuard = 1e-8;
constexpr std::uint32_t kCheckpointMagic = 0x4c464c5a;  // "ZLFL"
}  // namespace

FactoredLayer::FactoredLayer(std::size_t num_classes, std::size_t dim,
                             std::uint64_t seed, FactoredLayerConfig config)
    : num_classes_(num_classes), dim_(dim), config_(config) {
  if (num_classes < 2) throw ConfigError("factored layer needs >= 2 classes");
  if (dim < 1) throw ConfigError("factored layer needs dim >= 1");
  if (config.init_scale <= 0.0)
    throw ConfigError("init_scale must be positive");
  v_store_ = Matrix(num_classes_, dim_);
  Rng rng(seed);
  for (std::size_t i = 0; i < v_store_.size(); ++i)
    v_store_.data()[i] = rng.uniform(-config.init_scale, config.init_scale);
  omega_.assign(dim_, 0.0);
  u_ = Matrix::identity(dim_);
  u_inv_ = Matrix::identity(dim_);
  recompute_summaries();
}

void FactoredLayer::recompute_summaries() {
  v_bar_.assign(dim_, 0.0);
  g_ = Matrix(dim_, dim_);
  for (std::size_t i = 0; i < num_classes_; ++i) {
    auto row = v_store_.row(i);
    Vec eff(dim_);
    for (std::size_t j = 0; j < dim_; ++j) eff[j] = row[j] + omega_[j];
    axpy(1.0, eff, v_bar_);
    add_outer(g_, 1.0, eff, eff);
  }
}

void FactoredLayer::bump_version() { ++version_; }

FactoredLayer::ForwardCache FactoredLayer::forward(std::span<const double> h,
                                                   std::size_t target) const {
  if (h.size() != dim_) throw DataError("hidden vector has wrong dimension");
  if (target >= num_classes_) throw DataError("target class out of range");
  ForwardCache cache;
  cache.h.assign(h.begin(), h.end());
  cache.h_hat.resize(dim_);
  matvec(u_, h, cache.h_hat);
  cache.target_row_eff.resize(dim_);
  auto row = v_store_.row(target);
  for (std::size_t j = 0; j < dim_; ++j)
    cache.target_row_eff[j] = row[j] + omega_[j];
  cache.stats.dim = num_classes_;
  cache.stats.target = target;
  cache.stats.o_c = dot(cache.target_row_eff, cache.h_hat);
  cache.stats.q = dot(v_bar_, cache.h_hat);
  cache.stats.s_sq = quadratic_form(g_, cache.h_hat);
  cache.version = version_;
  return cache;
}

Vec FactoredLayer::input_grad(const ForwardCache& cache,
                              const SphericalGrad& grad) const {
  if (cache.version != version_)
    throw StaleCacheError("forward cache is stale");
  // t = alpha v_bar + 2 beta G h_hat + gamma v_c;  dL/dh = U^T t
  Vec t(dim_, 0.0);
  matvec(g_, cache.h_hat, t);
  for (std::size_t j = 0; j < dim_; ++j) t[j] *= 2.0 * grad.beta;
  axpy(grad.alpha, v_bar_, t);
  axpy(grad.gamma, cache.target_row_eff, t);
  Vec out(dim_);
  matvec_transpose(u_, t, out);
  return out;
}

void FactoredLayer::sgd_update(const ForwardCache& cache,
                               const SphericalGrad& grad, double eta) {
  if (cache.version != version_)
    throw StaleCacheError("forward cache is stale");
  sgd_update_deferred(cache.h, cache.stats.target, grad, eta);
}

void FactoredLayer::sgd_update_deferred(std::span<const double> h,
                                        std::size_t target,
                                        const SphericalGrad& grad,
                                        double eta) {
  if (h.size() != dim_) throw DataError("hidden vector has wrong dimension");
  if (target >= num_classes_) throw DataError("target class out of range");
  double kappa = 2.0 * eta * grad.beta;
  double h_sq = squared_norm(h);
  double denom = 1.0 - kappa * h_sq;
  if (std::fabs(denom) <= kSingularGuard)
    throw SingularUpdateError("rank-1 update is singular (1 - kappa ||h||^2 ~ 0)");

  // step 1: U <- U - kappa (U h) h^T and the Sherman-Morrison inverse
  if (kappa != 0.0) {
    Vec u_h(dim_);
    matvec(u_, h, u_h);
    add_outer(u_, -kappa, u_h, h);
    Vec r(dim_);
    matvec_transpose(u_inv_, h, r);  // r = U_inv^T h
    add_outer(u_inv_, kappa / denom, h, r);
  }

  // step 2: u = U_inv^T h with the updated inverse
  Vec u(dim_);
  matvec_transpose(u_inv_, h, u);

  // step 3: target row V_eff[c] += delta, with summary maintenance
  if (grad.gamma != 0.0) {
    Vec v_c_old(dim_);
    auto row = v_store_.row(target);
    for (std::size_t j = 0; j < dim_; ++j) v_c_old[j] = row[j] + omega_[j];
    Vec delta(dim_);
    for (std::size_t j = 0; j < dim_; ++j) delta[j] = -eta * grad.gamma * u[j];
    add_outer(g_, 1.0, v_c_old, delta);
    add_outer(g_, 1.0, delta, v_c_old);
    add_outer(g_, 1.0, delta, delta);
    axpy(1.0, delta, v_bar_);
    axpy(1.0, delta, row);
  }

  // step 4: all rows += d_omega through the global offset
  if (grad.alpha != 0.0) {
    Vec d_omega(dim_);
    for (std::size_t j = 0; j < dim_; ++j)
      d_omega[j] = -eta * grad.alpha * u[j];
    double d_classes = static_cast<double>(num_classes_);
    add_outer(g_, 1.0, v_bar_, d_omega);
    add_outer(g_, 1.0, d_omega, v_bar_);
    add_outer(g_, d_classes, d_omega, d_omega);
    axpy(d_classes, d_omega, v_bar_);
    axpy(1.0, d_omega, omega_);
  }

  ++step_count_;
  bump_version();
  bool due = config_.refactor_period > 0 &&
             step_count_ % config_.refactor_period == 0;
  if (due || cond_estimate() > config_.cond_limit) refactorize();
}

Vec FactoredLayer::full_scores(std::span<const double> h) const {
  if (h.size() != dim_) throw DataError("hidden vector has wrong dimension");
  Vec h_hat(dim_);
  matvec(u_, h, h_hat);
  double offset = dot(omega_, h_hat);
  Vec scores(num_classes_);
  matvec(v_store_, h_hat, scores);
  for (double& s : scores) s += offset;
  return scores;
}

Matrix FactoredLayer::materialize() const {
  Matrix out(num_classes_, dim_);
  Vec eff(dim_);
  for (std::size_t i = 0; i < num_classes_; ++i) {
    auto row = v_store_.row(i);
    for (std::size_t j = 0; j < dim_; ++j) eff[j] = row[j] + omega_[j];
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < dim_; ++k) axpy(eff[k], u_.row(k), out_row);
  }
  return out;
}

void FactoredLayer::refactorize() {
  v_store_ = materialize();
  omega_.assign(dim_, 0.0);
  u_.set_identity();
  u_inv_.set_identity();
  recompute_summaries();
  bump_version();
}

double FactoredLayer::cond_estimate() const {
  Vec col_sq(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    auto row = u_.row(i);
    for (std::size_t j = 0; j < dim_; ++j) col_sq[j] += row[j] * row[j];
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double v : col_sq) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

FactoredLayer::Integrity FactoredLayer::integrity_check() const {
  Integrity out;
  Matrix prod = matmul(u_, u_inv_);
  for (std::size_t i = 0; i < dim_; ++i) prod(i, i) -= 1.0;
  out.uinv_drift = max_abs(prod);

  Vec v_bar_ref(dim_, 0.0);
  Matrix g_ref(dim_, dim_);
  Vec eff(dim_);
  for (std::size_t i = 0; i < num_classes_; ++i) {
    auto row = v_store_.row(i);
    for (std::size_t j = 0; j < dim_; ++j) eff[j] = row[j] + omega_[j];
    axpy(1.0, eff, v_bar_ref);
    add_outer(g_ref, 1.0, eff, eff);
  }
  double vbar_scale = 0.0;
  double vbar_diff = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    vbar_scale = std::max(vbar_scale, std::fabs(v_bar_ref[j]));
    vbar_diff = std::max(vbar_diff, std::fabs(v_bar_ref[j] - v_bar_[j]));
  }
  out.vbar_drift = vbar_diff / std::max(vbar_scale, 1e-30);
  out.g_drift = max_abs_diff(g_, g_ref) / std::max(max_abs(g_ref), 1e-30);
  out.cond_estimate = cond_estimate();
  return out;
}

void FactoredLayer::save(std::ostream& os) {
  refactorize();
  io::write_u32(os, kCheckpointMagic);
  io::write_u64(os, num_classes_);
  io::write_u64(os, dim_);
  io::write_u64(os, config_.refactor_period);
  io::write_f64(os, config_.cond_limit);
  io::write_f64(os, config_.init_scale);
  io::write_u64(os, step_count_);
  os.write(reinterpret_cast<const char*>(v_store_.data()),
           static_cast<std::streamsize>(v_store_.size() * sizeof(double)));
  if (!os) throw DataError("failed to write factored layer checkpoint");
}

FactoredLayer FactoredLayer::load(std::istream& is) {
  if (io::read_u32(is) != kCheckpointMagic)
    throw DataError("not a factored layer checkpoint");
  FactoredLayer layer;
  layer.num_classes_ = io::read_u64(is);
  layer.dim_ = io::read_u64(is);
  layer.config_.refactor_period = io::read_u64(is);
  layer.config_.cond_limit = io::read_f64(is);
  layer.config_.init_scale = io::read_f64(is);
  layer.step_count_ = io::read_u64(is);
  layer.v_store_ = Matrix(layer.num_classes_, layer.dim_);
  is.read(reinterpret_cast<char*>(layer.v_store_.data()),
          static_cast<std::streamsize>(layer.v_store_.size() *
                                       sizeof(double)));
  if (!is) throw DataError("truncated factored layer checkpoint");
  layer.omega_.assign(layer.dim_, 0.0);
  layer.u_ = Matrix::identity(layer.dim_);
  layer.u_inv_ = Matrix::identity(layer.dim_);
  layer.recompute_summaries();
  return layer;
}

}  // namespace zloss
