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

#ifndef ZLOSS_NGRAM_MODEL_HPP_
#define ZLOSS_NGRAM_MODEL_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "zloss/common.hpp"
#include "zloss/dense_head.hpp"
#include "zloss/factored_layer.hpp"
#include "zloss/hsoftmax.hpp"
#include "zloss/losses.hpp"
#include "zloss/matrix.hpp"

namespace zloss {

enum class Activation { kTanh, kRelu };
enum class HeadKind { kDense, kFactored, kHsm };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);
HeadKind head_kind_from_name(const std::string& name);
const char* head_kind_name(HeadKind k);

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t context_len = 6;
  std::size_t emb_dim = 64;
  std::vector<std::size_t> hidden_sizes = {256};
  Activation activation = Activation::kTanh;
  HeadKind head = HeadKind::kDense;
  LossKind loss = LossKind::kLogSoftmax;
  ZLossParams zparams;
  std::uint64_t seed = 1;
  double init_scale = 1.0;
  /// Appends a constant-1 hidden feature so every head (the factored one
  /// included) gets an output bias without special-casing.
  bool output_bias = false;
  std::size_t refactor_period = 512;

  /// Throws ConfigError on inconsistent settings, e.g. a dense-only loss on
  /// the factored head.
  void validate() const;
};

/// Feed-forward n-gram language model: concatenated context embeddings, a
/// stack of bias-free nonlinear layers, and one pluggable output head.
class NgramModel {
 public:
  /// `class_freqs` drives the hierarchical softmax clustering (uniform
  /// clusters when empty); the other heads ignore it.
  explicit NgramModel(ModelConfig config,
                      std::span<const std::uint64_t> class_freqs = {});

  struct HiddenCache {
    std::vector<std::uint32_t> ctx;
    Vec concat;
    std::vector<Vec> pre;
    std::vector<Vec> act;
    Vec h;  // head input (includes the bias feature when enabled)
  };

  /// Hidden representation for one context; fills `cache` when given.
  Vec forward_hidden(std::span<const std::uint32_t> ctx,
                     HiddenCache* cache = nullptr) const;

  /// Accumulates hidden-stack and embedding gradients for a minibatch.
  /// Untouched embedding rows are never written.
  struct GradBuffer {
    std::vector<Matrix> hidden;
    std::unordered_map<std::uint32_t, Vec> embedding;
    std::size_t count = 0;
    void clear();
  };
  void accumulate_backward(const HiddenCache& cache,
                           std::span<const double> g_h,
                           GradBuffer& buffer) const;
  /// One SGD step with the buffer's mean gradient.
  void apply_gradients(const GradBuffer& buffer, double eta);
  /// Single-example convenience: accumulate + apply.
  void backward_step(const HiddenCache& cache, std::span<const double> g_h,
                     double eta);

  /// Full score vector for ranking; dispatches to the configured head.
  Vec full_scores(std::span<const double> h) const;

  std::size_t head_dim() const;
  const ModelConfig& config() const { return config_; }

  DenseHead& dense_head();
  const DenseHead& dense_head() const;
  FactoredLayer& factored_head();
  const FactoredLayer& factored_head() const;
  HSoftmaxHead& hsm_head();
  const HSoftmaxHead& hsm_head() const;

  Matrix& embedding() { return embedding_; }
  const Matrix& embedding() const { return embedding_; }
  std::vector<Matrix>& hidden_weights() { return hidden_; }
  const std::vector<Matrix>& hidden_weights() const { return hidden_; }

  void save(std::ostream& os);
  static NgramModel load(std::istream& is);

 private:
  NgramModel() = default;
  void build_head(std::span<const std::uint64_t> class_freqs);

  ModelConfig config_;
  Matrix embedding_;            // vocab x emb_dim
  std::vector<Matrix> hidden_;  // layer weights, out x in
  std::unique_ptr<DenseHead> dense_;
  std::unique_ptr<FactoredLayer> factored_;
  std::unique_ptr<HSoftmaxHead> hsm_;
};

}  // namespace zloss

#endif  // ZLOSS_NGRAM_MODEL_HPP_
