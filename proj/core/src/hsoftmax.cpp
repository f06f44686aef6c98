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

#include "zloss/hsoftmax.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "zloss/io.hpp"
#include "zloss/rng.hpp"

namespace zloss {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4d53485a;  // "ZHSM"

// In-place softmax with max subtraction; returns the log normalizer.
double softmax_inplace(Vec& scores) {
  double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    sum += s;
  }
  for (double& s : scores) s /= sum;
  return mx + std::log(sum);
}

// NLL of `target` under softmax(scores); scores becomes the gradient p - e_t.
double softmax_nll_grad(Vec& scores, std::size_t target) {
  double raw = scores[target];
  double lse = softmax_inplace(scores);
  scores[target] -= 1.0;
  return lse - raw;
}

}  // namespace

Clustering build_frequency_clusters(std::span<const std::uint64_t> freqs,
                                    std::size_t m) {
  std::size_t d = freqs.size();
  if (m < 1 || m > d) throw ConfigError("cluster count must be in [1, D]");
  std::vector<std::uint32_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     if (freqs[a] != freqs[b]) return freqs[a] > freqs[b];
                     return a < b;
                   });
  Clustering c;
  c.cluster_of.resize(d);
  c.pos_in_cluster.resize(d);
  c.members.resize(m);
  // first (d % m) clusters take one extra class
  std::size_t base = d / m;
  std::size_t extra = d % m;
  std::size_t next = 0;
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t size_j = base + (j < extra ? 1 : 0);
    c.members[j].reserve(size_j);
    for (std::size_t p = 0; p < size_j; ++p) {
      std::uint32_t cls = order[next++];
      c.cluster_of[cls] = static_cast<std::uint32_t>(j);
      c.pos_in_cluster[cls] = static_cast<std::uint32_t>(p);
      c.members[j].push_back(cls);
    }
  }
  return c;
}

std::size_t default_cluster_count(std::size_t num_classes) {
  return static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(num_classes))));
}

HSoftmaxHead::HSoftmaxHead(Clustering clustering, std::size_t dim,
                           double init_scale, std::uint64_t seed)
    : clustering_(std::move(clustering)), dim_(dim) {
  if (dim < 1) throw ConfigError("hsm head needs dim >= 1");
  Rng rng(seed);
  auto fill = [&](Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
      m.data()[i] = rng.uniform(-init_scale, init_scale);
  };
  w_cluster_ = Matrix(clustering_.num_clusters(), dim_);
  fill(w_cluster_);
  w_word_.reserve(clustering_.num_clusters());
  for (const auto& members : clustering_.members) {
    w_word_.emplace_back(members.size(), dim_);
    fill(w_word_.back());
  }
}

HSoftmaxHead::Workspace HSoftmaxHead::forward_backward(
    std::span<const double> h, std::size_t target) const {
  if (h.size() != dim_) throw DataError("hidden vector has wrong dimension");
  if (target >= num_classes()) throw DataError("target class out of range");
  Workspace ws;
  ws.cluster = clustering_.cluster_of[target];
  const Matrix& w_word = w_word_[ws.cluster];

  ws.cluster_grad.resize(w_cluster_.rows());
  matvec(w_cluster_, h, ws.cluster_grad);
  ws.value = softmax_nll_grad(ws.cluster_grad, ws.cluster);

  ws.word_grad.resize(w_word.rows());
  matvec(w_word, h, ws.word_grad);
  ws.value += softmax_nll_grad(ws.word_grad, clustering_.pos_in_cluster[target]);

  ws.input_grad.assign(dim_, 0.0);
  Vec tmp(dim_);
  matvec_transpose(w_cluster_, ws.cluster_grad, tmp);
  axpy(1.0, tmp, ws.input_grad);
  matvec_transpose(w_word, ws.word_grad, tmp);
  axpy(1.0, tmp, ws.input_grad);
  return ws;
}

void HSoftmaxHead::apply(const Workspace& ws, std::span<const double> h,
                         double eta) {
  add_outer(w_cluster_, -eta, ws.cluster_grad, h);
  add_outer(w_word_[ws.cluster], -eta, ws.word_grad, h);
}

HSoftmaxHead::Workspace HSoftmaxHead::step(std::span<const double> h,
                                           std::size_t target, double eta) {
  Workspace ws = forward_backward(h, target);
  if (eta != 0.0) apply(ws, h, eta);
  return ws;
}

Vec HSoftmaxHead::full_distribution(std::span<const double> h) const {
  if (h.size() != dim_) throw DataError("hidden vector has wrong dimension");
  Vec p_cluster(w_cluster_.rows());
  matvec(w_cluster_, h, p_cluster);
  softmax_inplace(p_cluster);
  Vec out(num_classes());
  Vec scores;
  for (std::size_t j = 0; j < clustering_.num_clusters(); ++j) {
    const auto& members = clustering_.members[j];
    scores.resize(members.size());
    matvec(w_word_[j], h, scores);
    softmax_inplace(scores);
    for (std::size_t p = 0; p < members.size(); ++p)
      out[members[p]] = p_cluster[j] * scores[p];
  }
  return out;
}

void HSoftmaxHead::save(std::ostream& os) const {
  io::write_u32(os, kCheckpointMagic);
  io::write_u64(os, num_classes());
  io::write_u64(os, num_clusters());
  io::write_u64(os, dim_);
  for (std::size_t i = 0; i < num_classes(); ++i) {
    io::write_u32(os, clustering_.cluster_of[i]);
    io::write_u32(os, clustering_.pos_in_cluster[i]);
  }
  os.write(reinterpret_cast<const char*>(w_cluster_.data()),
           static_cast<std::streamsize>(w_cluster_.size() * sizeof(double)));
  for (const Matrix& m : w_word_)
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!os) throw DataError("failed to write hsm checkpoint");
}

HSoftmaxHead HSoftmaxHead::load(std::istream& is) {
  if (io::read_u32(is) != kCheckpointMagic)
    throw DataError("not an hsm checkpoint");
  std::size_t d = io::read_u64(is);
  std::size_t m = io::read_u64(is);
  std::size_t dim = io::read_u64(is);
  Clustering clustering;
  clustering.cluster_of.resize(d);
  clustering.pos_in_cluster.resize(d);
  clustering.members.resize(m);
  for (std::size_t i = 0; i < d; ++i) {
    std::uint32_t c = io::read_u32(is);
    std::uint32_t pos = io::read_u32(is);
    if (c >= m) throw DataError("corrupt hsm checkpoint");
    clustering.cluster_of[i] = c;
    clustering.pos_in_cluster[i] = pos;
    if (pos >= clustering.members[c].size())
      clustering.members[c].resize(pos + 1);
    clustering.members[c][pos] = static_cast<std::uint32_t>(i);
  }
  HSoftmaxHead head(std::move(clustering), dim, 1.0, 0);
  is.read(reinterpret_cast<char*>(head.w_cluster_.data()),
          static_cast<std::streamsize>(head.w_cluster_.size() *
                                       sizeof(double)));
  for (Matrix& mat : head.w_word_)
    is.read(reinterpret_cast<char*>(mat.data()),
            static_cast<std::streamsize>(mat.size() * sizeof(double)));
  if (!is) throw DataError("truncated hsm checkpoint");
  return head;
}

}  // namespace zloss
