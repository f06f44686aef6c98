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

#ifndef ZLOSS_CORPUS_HPP_
#define ZLOSS_CORPUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "zloss/common.hpp"

namespace zloss {

inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kBosToken = "<s>";

/// Whitespace-token vocabulary with dense ids ordered by descending
/// frequency (ties by first occurrence). "<unk>" and "<s>" are appended
/// with zero count when the corpus does not contain them.
class Vocab {
 public:
  /// One sentence per line, whitespace-tokenized. `max_size` keeps the most
  /// frequent tokens (specials not counted); `min_count` drops rarer ones.
  static Vocab build(std::istream& text,
                     std::optional<std::size_t> max_size = std::nullopt,
                     std::optional<std::uint64_t> min_count = std::nullopt);

  std::size_t size() const { return tokens_.size(); }
  /// Id of a token, or unk_id for out-of-vocabulary tokens.
  std::uint32_t id_of(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::string& token(std::uint32_t id) const;
  std::uint64_t freq(std::uint32_t id) const { return freqs_.at(id); }
  const std::vector<std::uint64_t>& freqs() const { return freqs_; }
  std::uint32_t unk_id() const { return unk_id_; }
  std::uint32_t bos_id() const { return bos_id_; }

  /// Text format: header "D unk_token", then one "token count" line per id.
  void save(std::ostream& os) const;
  static Vocab load(std::istream& is);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint32_t unk_id_ = 0;
  std::uint32_t bos_id_ = 0;
};

/// Encoded (context, target) pairs; contexts are stored flat, row-major,
/// context_len ids per example.
struct NgramDataset {
  std::size_t context_len = 0;
  std::vector<std::uint32_t> contexts;
  std::vector<std::uint32_t> targets;

  std::size_t size() const { return targets.size(); }
  std::span<const std::uint32_t> context(std::size_t i) const {
    return {contexts.data() + i * context_len, context_len};
  }
};

/// Emits one (context, target) pair per token. Each line starts from n-1
/// boundary pads, so a target is never a pad and contexts do not cross
/// lines.
NgramDataset encode_ngrams(std::istream& text, const Vocab& vocab,
                           std::size_t n);

/// Flat binary cache: 16-byte header (magic, n, N), then N*(n-1) context
/// ids and N target ids, 32-bit little-endian.
void save_dataset_cache(std::ostream& os, const NgramDataset& dataset);
NgramDataset load_dataset_cache(std::istream& is);

/// Deterministic minibatch index stream; the final partial batch is
/// emitted. Without a seed, examples come in dataset order.
class BatchStream {
 public:
  BatchStream(std::size_t num_examples, std::size_t batch_size,
              std::optional<std::uint64_t> shuffle_seed = std::nullopt);

  /// Next batch of example indices; empty when the pass is done.
  std::span<const std::uint32_t> next();
  void reset(std::optional<std::uint64_t> shuffle_seed);

 private:
  std::size_t batch_size_;
  std::vector<std::uint32_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace zloss

#endif  // ZLOSS_CORPUS_HPP_
