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

#include "zloss/dense_head.hpp"

#include <istream>
#include <ostream>

#include "zloss/io.hpp"
#include "zloss/rng.hpp"

namespace zloss {

namespace {
constexpr std::uint32_t kCheckpointMagic = 0x4844 | (0x5a4c << 16);  // "DHZL"
}

DenseHead::DenseHead(std::size_t num_classes, std::size_t dim,
                     double init_scale, std::uint64_t seed) {
  if (num_classes < 2) throw ConfigError("dense head needs >= 2 classes");
  if (dim < 1) throw ConfigError("dense head needs dim >= 1");
  weights_ = Matrix(num_classes, dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < weights_.size(); ++i)
    weights_.data()[i] = rng.uniform(-init_scale, init_scale);
}

Vec DenseHead::scores(std::span<const double> h) const {
  if (h.size() != dim()) throw DataError("hidden vector has wrong dimension");
  Vec o(num_classes());
  matvec(weights_, h, o);
  return o;
}

DenseHead::StepResult DenseHead::step(std::span<const double> h,
                                      std::size_t target, LossKind kind,
                                      const ZLossParams& params, double eta) {
  Vec o = scores(h);
  DenseEval eval = dense_eval(kind, o, target, params);
  StepResult result;
  result.value = eval.value;
  result.degenerate = eval.degenerate;
  result.input_grad.resize(dim());
  matvec_transpose(weights_, eval.grad, result.input_grad);
  if (eta != 0.0) apply_dense_grad(h, eval.grad, eta);
  return result;
}

void DenseHead::apply_dense_grad(std::span<const double> h,
                                 std::span<const double> g, double eta) {
  if (g.size() != num_classes()) throw DataError("gradient has wrong length");
  add_outer(weights_, -eta, g, h);
}

void DenseHead::apply_spherical_grad(std::span<const double> h,
                                     std::size_t target,
                                     const SphericalGrad& grad, double eta) {
  if (target >= num_classes()) throw DataError("target class out of range");
  // W -= eta (alpha 1 + 2 beta W h + gamma e_c) h^T with the 2 beta W h term
  // taken against the current weights, exactly as the factored layer does.
  Vec o = scores(h);
  for (std::size_t i = 0; i < num_classes(); ++i) {
    double gi = grad.alpha + 2.0 * grad.beta * o[i];
    if (i == target) gi += grad.gamma;
    axpy(-eta * gi, h, weights_.row(i));
  }
}

void DenseHead::save(std::ostream& os) const {
  io::write_u32(os, kCheckpointMagic);
  io::write_u64(os, num_classes());
  io::write_u64(os, dim());
  os.write(reinterpret_cast<const char*>(weights_.data()),
           static_cast<std::streamsize>(weights_.size() * sizeof(double)));
  if (!os) throw DataError("failed to write dense head checkpoint");
}

DenseHead DenseHead::load(std::istream& is) {
  if (io::read_u32(is) != kCheckpointMagic)
    throw DataError("not a dense head checkpoint");
  DenseHead head;
  std::size_t rows = io::read_u64(is);
  std::size_t cols = io::read_u64(is);
  head.weights_ = Matrix(rows, cols);
  is.read(reinterpret_cast<char*>(head.weights_.data()),
          static_cast<std::streamsize>(head.weights_.size() * sizeof(double)));
  if (!is) throw DataError("truncated dense head checkpoint");
  return head;
}

}  // namespace zloss
