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

#ifndef ZLOSS_TRAINER_HPP_
#define ZLOSS_TRAINER_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zloss/corpus.hpp"
#include "zloss/metrics.hpp"
#include "zloss/ngram_model.hpp"

namespace zloss {

enum class PlateauMetric { kTop1, kTop5, kMrr };

PlateauMetric plateau_metric_from_name(const std::string& name);
const char* plateau_metric_name(PlateauMetric m);

struct TrainConfig {
  double eta0 = 0.1;
  std::size_t batch_size = 250;
  /// Halve-style decay: after `plateau_patience` consecutive evaluations
  /// without improvement, eta *= plateau_factor and the counter resets.
  std::size_t plateau_patience = 2;
  double plateau_factor = 0.5;
  PlateauMetric plateau_metric = PlateauMetric::kTop1;
  std::size_t max_epochs = 1;
  /// Evaluate every this many examples; 0 means once per epoch.
  std::size_t eval_every = 0;
  std::vector<std::size_t> k_set = {1, 5, 10, 20, 50, 100};
  bool shuffle = true;
  std::uint64_t shuffle_seed = 0;

  void validate(std::size_t vocab_size) const;
};

struct TrainRecord {
  std::size_t examples_seen = 0;
  double wall_seconds = 0.0;
  double eta = 0.0;
  double train_loss = 0.0;  // mean loss since the previous record
  std::size_t degenerate_skipped = 0;
  MetricsReport valid;

  std::string to_json() const;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  std::size_t total_degenerate_skipped = 0;
};

/// Minibatch SGD. Per batch: every example is forwarded against the
/// pre-batch weights; the head then consumes the per-example gradients
/// sequentially at eta/K (exact rank-1 steps); the hidden stack and
/// embeddings take one step with the batch-mean gradient. Examples whose
/// normalized loss hits the sigma floor are counted and contribute nothing.
/// Appends one JSONL record per evaluation to `jsonl` when given.
TrainLog train(NgramModel& model, const NgramDataset& train_data,
               const NgramDataset& valid_data, const TrainConfig& config,
               std::ostream* jsonl = nullptr);

/// Ranks every example's target under the model's full scores and
/// aggregates top-k errors and MRR. Examples are sharded across up to
/// ZLOSS_NUM_EVAL_WORKERS threads against the frozen model.
MetricsReport evaluate(const NgramModel& model, const NgramDataset& data,
                       std::span<const std::size_t> k_set);

/// Worker cap from ZLOSS_NUM_EVAL_WORKERS (default: hardware concurrency,
/// at most 4).
std::size_t eval_worker_count();

}  // namespace zloss

#endif  // ZLOSS_TRAINER_HPP_
