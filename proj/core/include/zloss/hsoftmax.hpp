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

#ifndef ZLOSS_HSOFTMAX_HPP_
#define ZLOSS_HSOFTMAX_HPP_

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "zloss/common.hpp"
#include "zloss/matrix.hpp"

namespace zloss {

/// Partition of [0, D) into clusters for the two-level hierarchical softmax.
struct Clustering {
  std::vector<std::uint32_t> cluster_of;     // class -> cluster
  std::vector<std::uint32_t> pos_in_cluster; // class -> index within cluster
  std::vector<std::vector<std::uint32_t>> members;

  std::size_t num_clusters() const { return members.size(); }
  std::size_t num_classes() const { return cluster_of.size(); }
};

/// Sorts classes by descending frequency (ties by class index) and splits
/// them into m contiguous groups whose sizes differ by at most one.
Clustering build_frequency_clusters(std::span<const std::uint64_t> freqs,
                                    std::size_t m);

/// sqrt-sized cluster count used by default: ceil(sqrt(D)).
std::size_t default_cluster_count(std::size_t num_classes);

/// Two-level hierarchical softmax head: the loss is
/// -log softmax_{cluster(c)}(W_cluster h) - log softmax_{pos(c)}(W_word[j] h).
/// Training touches only the cluster matrix and the target's cluster, about
/// O(sqrt(D) d) per example when m ~ sqrt(D).
class HSoftmaxHead {
 public:
  HSoftmaxHead(Clustering clustering, std::size_t dim, double init_scale,
               std::uint64_t seed);

  struct Workspace {
    std::size_t cluster = 0;
    double value = 0.0;
    Vec input_grad;
    Vec cluster_grad;  // softmax(W_cluster h) - e_j
    Vec word_grad;     // softmax(W_word[j] h) - e_pos
  };

  /// Loss, input gradient and the sparse weight gradients for one example,
  /// all against the current weights. Does not update.
  Workspace forward_backward(std::span<const double> h,
                             std::size_t target) const;

  /// W_cluster and W_word[ws.cluster] take one SGD step.
  void apply(const Workspace& ws, std::span<const double> h, double eta);

  /// forward_backward + apply.
  Workspace step(std::span<const double> h, std::size_t target, double eta);

  /// p(c | h) for every class; sums to 1. O(D d), evaluation only.
  Vec full_distribution(std::span<const double> h) const;

  std::size_t num_classes() const { return clustering_.num_classes(); }
  std::size_t num_clusters() const { return clustering_.num_clusters(); }
  std::size_t dim() const { return dim_; }
  const Clustering& clustering() const { return clustering_; }
  Matrix& cluster_weights() { return w_cluster_; }
  Matrix& word_weights(std::size_t cluster) { return w_word_[cluster]; }

  void save(std::ostream& os) const;
  static HSoftmaxHead load(std::istream& is);

 private:
  Clustering clustering_;
  std::size_t dim_ = 0;
  Matrix w_cluster_;            // m x d
  std::vector<Matrix> w_word_;  // per cluster: |members_j| x d
};

}  // namespace zloss

#endif  // ZLOSS_HSOFTMAX_HPP_
