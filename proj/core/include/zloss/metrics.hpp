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

#ifndef ZLOSS_METRICS_HPP_
#define ZLOSS_METRICS_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "zloss/common.hpp"

namespace zloss {

/// Top-k error rates for a configured k set plus the mean reciprocal rank.
struct MetricsReport {
  std::map<std::size_t, double> topk_error;
  double mrr = 0.0;
  std::size_t n_examples = 0;

  std::string to_json() const;
};

/// Rank of the target's score, in [1, D]. Larger scores rank first; equal
/// scores are broken by class index (lower index wins), so evaluation is
/// deterministic and RNG-free. Throws DataError on NaN scores.
std::size_t rank_of_target(std::span<const double> scores, std::size_t target);

/// Streaming rank aggregator. Partial aggregates from parallel shards merge
/// by summation.
class RankAccumulator {
 public:
  explicit RankAccumulator(std::span<const std::size_t> k_set);

  void add(std::size_t rank);
  void merge(const RankAccumulator& other);
  MetricsReport report() const;  // throws DataError if empty

  std::size_t count() const { return n_; }

 private:
  std::vector<std::size_t> k_set_;
  std::vector<std::size_t> hits_;  // hits_[i] = #(rank <= k_set_[i])
  double reciprocal_sum_ = 0.0;
  std::size_t n_ = 0;
};

/// One-shot aggregation of a rank stream.
MetricsReport aggregate(std::span<const std::size_t> ranks,
                        std::span<const std::size_t> k_set);

/// Constant classifier that scores every example with the training
/// frequency vector.
MetricsReport constant_baseline(std::span<const std::uint64_t> freqs,
                                std::span<const std::uint32_t> eval_targets,
                                std::span<const std::size_t> k_set);

}  // namespace zloss

#endif  // ZLOSS_METRICS_HPP_
