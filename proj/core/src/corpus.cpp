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

#include "zloss/corpus.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "zloss/io.hpp"
#include "zloss/rng.hpp"

namespace zloss {

namespace {

constexpr std::uint32_t kCacheMagic = 0x5347'4e5a;  // "ZNGS"

void for_each_token(const std::string& line, auto&& fn) {
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) fn(line.substr(start, i - start));
  }
}

}  // namespace

Vocab Vocab::build(std::istream& text, std::optional<std::size_t> max_size,
                   std::optional<std::uint64_t> min_count) {
  struct Entry {
    std::uint64_t count = 0;
    std::uint64_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::uint64_t token_index = 0;
  std::string line;
  while (std::getline(text, line)) {
    for_each_token(line, [&](std::string tok) {
      auto [it, inserted] = counts.try_emplace(std::move(tok));
      if (inserted) it->second.first_seen = token_index;
      ++it->second.count;
      ++token_index;
    });
  }
  if (token_index == 0) throw DataError("empty corpus");

  std::vector<std::pair<std::string, Entry>> entries(counts.begin(),
                                                     counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count)
      return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  if (min_count)
    std::erase_if(entries,
                  [&](const auto& e) { return e.second.count < *min_count; });
  if (max_size && entries.size() > *max_size) entries.resize(*max_size);

  Vocab v;
  for (auto& [tok, entry] : entries) {
    v.index_.emplace(tok, static_cast<std::uint32_t>(v.tokens_.size()));
    v.tokens_.push_back(std::move(tok));
    v.freqs_.push_back(entry.count);
  }
  for (const char* special : {kUnkToken, kBosToken}) {
    if (!v.index_.contains(special)) {
      v.index_.emplace(special, static_cast<std::uint32_t>(v.tokens_.size()));
      v.tokens_.emplace_back(special);
      v.freqs_.push_back(0);
    }
  }
  v.unk_id_ = v.index_.at(kUnkToken);
  v.bos_id_ = v.index_.at(kBosToken);
  return v;
}

std::uint32_t Vocab::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk_id_ : it->second;
}

bool Vocab::contains(const std::string& token) const {
  return index_.contains(token);
}

const std::string& Vocab::token(std::uint32_t id) const {
  if (id >= tokens_.size()) throw DataError("token id out of range");
  return tokens_[id];
}

void Vocab::save(std::ostream& os) const {
  os << size() << ' ' << kUnkToken << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    os << tokens_[i] << ' ' << freqs_[i] << '\n';
  if (!os) throw DataError("failed to write vocab file");
}

Vocab Vocab::load(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw DataError("empty vocab file");
  std::istringstream hs(header);
  std::size_t d = 0;
  std::string unk_token;
  if (!(hs >> d >> unk_token)) throw DataError("malformed vocab header");
  Vocab v;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    std::uint64_t count = 0;
    if (!(ls >> token)) throw DataError("malformed vocab line");
    ls >> count;
    v.index_.emplace(token, static_cast<std::uint32_t>(v.tokens_.size()));
    v.tokens_.push_back(token);
    v.freqs_.push_back(count);
  }
  if (v.tokens_.size() != d)
    throw DataError("vocab file token count does not match header");
  auto unk_it = v.index_.find(unk_token);
  if (unk_it == v.index_.end()) throw DataError("vocab unk token missing");
  v.unk_id_ = unk_it->second;
  auto bos_it = v.index_.find(kBosToken);
  v.bos_id_ = bos_it == v.index_.end() ? v.unk_id_ : bos_it->second;
  return v;
}

NgramDataset encode_ngrams(std::istream& text, const Vocab& vocab,
                           std::size_t n) {
  if (n < 2) throw ConfigError("ngram order must be >= 2");
  NgramDataset ds;
  ds.context_len = n - 1;
  std::vector<std::uint32_t> window;
  std::string line;
  while (std::getline(text, line)) {
    window.assign(ds.context_len, vocab.bos_id());
    for_each_token(line, [&](const std::string& tok) {
      std::uint32_t id = vocab.id_of(tok);
      ds.contexts.insert(ds.contexts.end(), window.begin(), window.end());
      ds.targets.push_back(id);
      window.erase(window.begin());
      window.push_back(id);
    });
  }
  return ds;
}

void save_dataset_cache(std::ostream& os, const NgramDataset& dataset) {
  io::write_u32(os, kCacheMagic);
  io::write_u32(os, static_cast<std::uint32_t>(dataset.context_len + 1));
  io::write_u64(os, dataset.size());
  for (std::uint32_t v : dataset.contexts) io::write_u32(os, v);
  for (std::uint32_t v : dataset.targets) io::write_u32(os, v);
  if (!os) throw DataError("failed to write dataset cache");
}

NgramDataset load_dataset_cache(std::istream& is) {
  if (io::read_u32(is) != kCacheMagic)
    throw DataError("not a dataset cache file");
  std::uint32_t n = io::read_u32(is);
  std::uint64_t count = io::read_u64(is);
  if (n < 2) throw DataError("corrupt dataset cache header");
  NgramDataset ds;
  ds.context_len = n - 1;
  ds.contexts.resize(ds.context_len * count);
  ds.targets.resize(count);
  for (auto& v : ds.contexts) v = io::read_u32(is);
  for (auto& v : ds.targets) v = io::read_u32(is);
  return ds;
}

BatchStream::BatchStream(std::size_t num_examples, std::size_t batch_size,
                         std::optional<std::uint64_t> shuffle_seed)
    : batch_size_(batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  order_.resize(num_examples);
  for (std::size_t i = 0; i < num_examples; ++i)
    order_[i] = static_cast<std::uint32_t>(i);
  reset(shuffle_seed);
}

std::span<const std::uint32_t> BatchStream::next() {
  if (pos_ >= order_.size()) return {};
  std::size_t count = std::min(batch_size_, order_.size() - pos_);
  std::span<const std::uint32_t> batch{order_.data() + pos_, count};
  pos_ += count;
  return batch;
}

void BatchStream::reset(std::optional<std::uint64_t> shuffle_seed) {
  pos_ = 0;
  std::sort(order_.begin(), order_.end());
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(order_);
  }
}

}  // namespace zloss
