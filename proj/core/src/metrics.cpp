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

#include "zloss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace zloss {

std::size_t rank_of_target(std::span<const double> scores,
                           std::size_t target) {
  if (target >= scores.size()) throw DataError("target index out of range");
  double s_c = scores[target];
  if (std::isnan(s_c)) throw DataError("NaN score");
  std::size_t rank = 1;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    double s = scores[k];
    if (std::isnan(s)) throw DataError("NaN score");
    if (s > s_c || (s == s_c && k < target)) ++rank;
  }
  return rank;
}

RankAccumulator::RankAccumulator(std::span<const std::size_t> k_set)
    : k_set_(k_set.begin(), k_set.end()), hits_(k_set.size(), 0) {
  if (k_set_.empty()) throw ConfigError("k set must be non-empty");
  if (!std::is_sorted(k_set_.begin(), k_set_.end()))
    std::sort(k_set_.begin(), k_set_.end());
}

void RankAccumulator::add(std::size_t rank) {
  if (rank < 1) throw DataError("ranks start at 1");
  for (std::size_t i = 0; i < k_set_.size(); ++i)
    if (rank <= k_set_[i]) ++hits_[i];
  reciprocal_sum_ += 1.0 / static_cast<double>(rank);
  ++n_;
}

void RankAccumulator::merge(const RankAccumulator& other) {
  if (other.k_set_ != k_set_)
    throw ConfigError("cannot merge accumulators with different k sets");
  for (std::size_t i = 0; i < hits_.size(); ++i) hits_[i] += other.hits_[i];
  reciprocal_sum_ += other.reciprocal_sum_;
  n_ += other.n_;
}

MetricsReport RankAccumulator::report() const {
  if (n_ == 0) throw DataError("no examples aggregated");
  MetricsReport r;
  r.n_examples = n_;
  r.mrr = reciprocal_sum_ / static_cast<double>(n_);
  for (std::size_t i = 0; i < k_set_.size(); ++i)
    r.topk_error[k_set_[i]] =
        1.0 - static_cast<double>(hits_[i]) / static_cast<double>(n_);
  return r;
}

MetricsReport aggregate(std::span<const std::size_t> ranks,
                        std::span<const std::size_t> k_set) {
  RankAccumulator acc(k_set);
  for (std::size_t r : ranks) acc.add(r);
  return acc.report();
}

MetricsReport constant_baseline(std::span<const std::uint64_t> freqs,
                                std::span<const std::uint32_t> eval_targets,
                                std::span<const std::size_t> k_set) {
  // The score vector is the same for every example, so each class's rank can
  // be computed once.
  std::vector<double> scores(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i)
    scores[i] = static_cast<double>(freqs[i]);
  std::vector<std::size_t> rank_of(freqs.size());
  for (std::size_t c = 0; c < freqs.size(); ++c)
    rank_of[c] = rank_of_target(scores, c);
  RankAccumulator acc(k_set);
  for (std::uint32_t t : eval_targets) {
    if (t >= freqs.size()) throw DataError("eval target out of range");
    acc.add(rank_of[t]);
  }
  return acc.report();
}

std::string MetricsReport::to_json() const {
  std::string out = "{\"n\": " + std::to_string(n_examples);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", mrr);
  out += ", \"mrr\": ";
  out += buf;
  out += ", \"topk\": {";
  bool first = true;
  for (const auto& [k, err] : topk_error) {
    if (!first) out += ", ";
    first = false;
    std::snprintf(buf, sizeof(buf), "\"%zu\": %.12g", k, err);
    out += buf;
  }
  out += "}}";
  return out;
}

}  // namespace zloss
