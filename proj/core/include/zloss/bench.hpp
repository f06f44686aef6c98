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

#ifndef ZLOSS_BENCH_HPP_
#define ZLOSS_BENCH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "zloss/losses.hpp"
#include "zloss/ngram_model.hpp"

namespace zloss {

/// Output-layer scaling benchmark on synthetic data: Gaussian hidden
/// vectors, uniform random targets. Timings are per example, measured over
/// `steps` examples after a short warmup. The factored layer runs without
/// periodic refactorization so the timed cost is the per-step O(d^2) work;
/// maintenance is amortized separately (see FactoredLayerConfig).
struct BenchConfig {
  std::vector<HeadKind> heads = {HeadKind::kDense, HeadKind::kFactored,
                                 HeadKind::kHsm};
  std::vector<std::size_t> class_counts = {20000, 200000};
  std::size_t dim = 512;
  std::size_t batch = 100;
  std::size_t steps = 2000;
  /// Loss for the dense head; factored always uses the Z-loss and the
  /// hierarchical softmax defines its own.
  LossKind dense_loss = LossKind::kLogSoftmax;
  ZLossParams zparams = {0.1, 10.0};
  double epoch_examples = 150e6;
  std::uint64_t seed = 7;
  /// Also time the whole model (embeddings + hidden stack + head).
  bool include_total = true;
};

struct BenchRow {
  std::string head;
  std::string loss;
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::size_t batch = 0;
  std::size_t steps = 0;
  double sec_per_1k_examples_output_only = 0.0;
  double sec_per_1k_examples_total = 0.0;
  double extrapolated_epoch_seconds = 0.0;
};

/// Per-example cost of the output layer alone: forward + loss + input
/// gradient + SGD update.
double bench_output_layer(HeadKind head, LossKind loss,
                          const ZLossParams& zparams, std::size_t num_classes,
                          std::size_t dim, std::size_t steps,
                          std::uint64_t seed);

/// Per-example cost of a full n-gram model step (context 6, 64-dim
/// embeddings, one hidden layer of `dim` units) in minibatches of `batch`.
double bench_whole_model(HeadKind head, LossKind loss,
                         const ZLossParams& zparams, std::size_t num_classes,
                         std::size_t dim, std::size_t batch, std::size_t steps,
                         std::uint64_t seed);

std::vector<BenchRow> run_bench(const BenchConfig& config);

/// Schema-stable CSV: head,loss,D,d,batch,steps,
/// sec_per_1k_examples_output_only,sec_per_1k_examples_total,
/// extrapolated_epoch_seconds
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace zloss

#endif  // ZLOSS_BENCH_HPP_
