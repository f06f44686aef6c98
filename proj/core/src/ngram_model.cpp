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

#include "zloss/ngram_model.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "zloss/io.hpp"
#include "zloss/rng.hpp"

namespace zloss {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4d4c4e5a;  // "ZNLM"

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void fill_uniform(Matrix& m, double scale, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(-scale, scale);
}

}  // namespace

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation: " + name);
}

const char* activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

HeadKind head_kind_from_name(const std::string& name) {
  if (name == "dense") return HeadKind::kDense;
  if (name == "factored") return HeadKind::kFactored;
  if (name == "hsm") return HeadKind::kHsm;
  throw ConfigError("unknown head kind: " + name);
}

const char* head_kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::kDense:
      return "dense";
    case HeadKind::kFactored:
      return "factored";
    case HeadKind::kHsm:
      return "hsm";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("vocab size must be >= 2");
  if (context_len < 1) throw ConfigError("context length must be >= 1");
  if (emb_dim < 1) throw ConfigError("embedding dim must be >= 1");
  if (hidden_sizes.empty()) throw ConfigError("need at least one hidden layer");
  for (std::size_t s : hidden_sizes)
    if (s < 1) throw ConfigError("hidden sizes must be positive");
  if (init_scale <= 0.0) throw ConfigError("init scale must be positive");
  if (head == HeadKind::kFactored && !is_spherical(loss))
    throw ConfigError(std::string(loss_kind_name(loss)) +
                      " is not a spherical loss and cannot drive the "
                      "factored output layer; use a dense head");
  if ((loss == LossKind::kZLoss || loss == LossKind::kSz) && zparams.a <= 0.0)
    throw ConfigError("loss parameter a must be > 0");
}

NgramModel::NgramModel(ModelConfig config,
                       std::span<const std::uint64_t> class_freqs)
    : config_(std::move(config)) {
  config_.validate();
  embedding_ = Matrix(config_.vocab_size, config_.emb_dim);
  fill_uniform(embedding_, config_.init_scale, mix_seed(config_.seed, 1));
  std::size_t in = config_.context_len * config_.emb_dim;
  for (std::size_t l = 0; l < config_.hidden_sizes.size(); ++l) {
    std::size_t out = config_.hidden_sizes[l];
    hidden_.emplace_back(out, in);
    fill_uniform(hidden_.back(),
                 config_.init_scale / std::sqrt(static_cast<double>(in)),
                 mix_seed(config_.seed, 2 + l));
    in = out;
  }
  build_head(class_freqs);
}

void NgramModel::build_head(std::span<const std::uint64_t> class_freqs) {
  std::size_t d = head_dim();
  double scale = config_.init_scale / std::sqrt(static_cast<double>(d));
  std::uint64_t head_seed = mix_seed(config_.seed, 1000);
  switch (config_.head) {
    case HeadKind::kDense:
      dense_ = std::make_unique<DenseHead>(config_.vocab_size, d, scale,
                                           head_seed);
      break;
    case HeadKind::kFactored: {
      FactoredLayerConfig fc;
      fc.init_scale = scale;
      fc.refactor_period = config_.refactor_period;
      factored_ = std::make_unique<FactoredLayer>(config_.vocab_size, d,
                                                  head_seed, fc);
      break;
    }
    case HeadKind::kHsm: {
      std::vector<std::uint64_t> freqs(class_freqs.begin(), class_freqs.end());
      if (freqs.empty()) freqs.assign(config_.vocab_size, 1);
      if (freqs.size() != config_.vocab_size)
        throw ConfigError("class frequency table does not match vocab size");
      Clustering clustering = build_frequency_clusters(
          freqs, default_cluster_count(config_.vocab_size));
      hsm_ = std::make_unique<HSoftmaxHead>(std::move(clustering), d, scale,
                                            head_seed);
      break;
    }
  }
}

std::size_t NgramModel::head_dim() const {
  return config_.hidden_sizes.back() + (config_.output_bias ? 1 : 0);
}

Vec NgramModel::forward_hidden(std::span<const std::uint32_t> ctx,
                               HiddenCache* cache) const {
  if (ctx.size() != config_.context_len)
    throw DataError("context has wrong length");
  Vec x(config_.context_len * config_.emb_dim);
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (ctx[i] >= config_.vocab_size) throw DataError("word id out of range");
    auto row = embedding_.row(ctx[i]);
    std::copy(row.begin(), row.end(), x.begin() + i * config_.emb_dim);
  }
  if (cache) {
    cache->ctx.assign(ctx.begin(), ctx.end());
    cache->concat = x;
    cache->pre.clear();
    cache->act.clear();
  }
  for (const Matrix& w : hidden_) {
    Vec pre(w.rows());
    matvec(w, x, pre);
    if (cache) cache->pre.push_back(pre);
    for (double& v : pre)
      v = config_.activation == Activation::kTanh ? std::tanh(v)
                                                  : std::max(v, 0.0);
    x = std::move(pre);
    if (cache) cache->act.push_back(x);
  }
  if (config_.output_bias) x.push_back(1.0);
  if (cache) cache->h = x;
  return x;
}

void NgramModel::GradBuffer::clear() {
  hidden.clear();
  embedding.clear();
  count = 0;
}

void NgramModel::accumulate_backward(const HiddenCache& cache,
                                     std::span<const double> g_h,
                                     GradBuffer& buffer) const {
  if (g_h.size() != head_dim()) throw DataError("g_h has wrong dimension");
  if (cache.act.size() != hidden_.size())
    throw StaleCacheError("hidden cache does not match the model");
  if (buffer.hidden.empty()) {
    for (const Matrix& w : hidden_)
      buffer.hidden.emplace_back(w.rows(), w.cols());
  }
  // gradient of the last hidden activation; the bias feature is constant
  Vec g_act(g_h.begin(),
            g_h.begin() + static_cast<std::ptrdiff_t>(
                              config_.hidden_sizes.back()));
  for (std::size_t l = hidden_.size(); l-- > 0;) {
    const Vec& act = cache.act[l];
    const Vec& pre = cache.pre[l];
    Vec g_pre(act.size());
    for (std::size_t i = 0; i < act.size(); ++i) {
      double d = config_.activation == Activation::kTanh
                     ? 1.0 - act[i] * act[i]
                     : (pre[i] > 0.0 ? 1.0 : 0.0);
      g_pre[i] = g_act[i] * d;
    }
    const Vec& input = l == 0 ? cache.concat : cache.act[l - 1];
    add_outer(buffer.hidden[l], 1.0, g_pre, input);
    g_act.assign(input.size(), 0.0);
    matvec_transpose(hidden_[l], g_pre, g_act);
  }
  // g_act is now the gradient of the embedding concatenation
  for (std::size_t i = 0; i < cache.ctx.size(); ++i) {
    auto [it, inserted] =
        buffer.embedding.try_emplace(cache.ctx[i], config_.emb_dim, 0.0);
    for (std::size_t j = 0; j < config_.emb_dim; ++j)
      it->second[j] += g_act[i * config_.emb_dim + j];
  }
  ++buffer.count;
}

void NgramModel::apply_gradients(const GradBuffer& buffer, double eta) {
  if (buffer.count == 0) return;
  double scale = -eta / static_cast<double>(buffer.count);
  for (std::size_t l = 0; l < hidden_.size(); ++l)
    for (std::size_t i = 0; i < hidden_[l].size(); ++i)
      hidden_[l].data()[i] += scale * buffer.hidden[l].data()[i];
  for (const auto& [id, g] : buffer.embedding)
    axpy(scale, g, embedding_.row(id));
}

void NgramModel::backward_step(const HiddenCache& cache,
                               std::span<const double> g_h, double eta) {
  GradBuffer buffer;
  accumulate_backward(cache, g_h, buffer);
  apply_gradients(buffer, eta);
}

Vec NgramModel::full_scores(std::span<const double> h) const {
  switch (config_.head) {
    case HeadKind::kDense:
      return dense_->scores(h);
    case HeadKind::kFactored:
      return factored_->full_scores(h);
    case HeadKind::kHsm:
      return hsm_->full_distribution(h);
  }
  throw ConfigError("bad head kind");
}

DenseHead& NgramModel::dense_head() {
  if (!dense_) throw ConfigError("model has no dense head");
  return *dense_;
}
const DenseHead& NgramModel::dense_head() const {
  return const_cast<NgramModel*>(this)->dense_head();
}
FactoredLayer& NgramModel::factored_head() {
  if (!factored_) throw ConfigError("model has no factored head");
  return *factored_;
}
const FactoredLayer& NgramModel::factored_head() const {
  return const_cast<NgramModel*>(this)->factored_head();
}
HSoftmaxHead& NgramModel::hsm_head() {
  if (!hsm_) throw ConfigError("model has no hsm head");
  return *hsm_;
}
const HSoftmaxHead& NgramModel::hsm_head() const {
  return const_cast<NgramModel*>(this)->hsm_head();
}

void NgramModel::save(std::ostream& os) {
  io::write_u32(os, kCheckpointMagic);
  io::write_u64(os, config_.vocab_size);
  io::write_u64(os, config_.context_len);
  io::write_u64(os, config_.emb_dim);
  io::write_u64(os, config_.hidden_sizes.size());
  for (std::size_t s : config_.hidden_sizes) io::write_u64(os, s);
  io::write_string(os, activation_name(config_.activation));
  io::write_string(os, head_kind_name(config_.head));
  io::write_string(os, loss_kind_name(config_.loss));
  io::write_f64(os, config_.zparams.a);
  io::write_f64(os, config_.zparams.b);
  io::write_u64(os, config_.seed);
  io::write_f64(os, config_.init_scale);
  io::write_u32(os, config_.output_bias ? 1 : 0);
  io::write_u64(os, config_.refactor_period);
  os.write(reinterpret_cast<const char*>(embedding_.data()),
           static_cast<std::streamsize>(embedding_.size() * sizeof(double)));
  for (const Matrix& w : hidden_)
    os.write(reinterpret_cast<const char*>(w.data()),
             static_cast<std::streamsize>(w.size() * sizeof(double)));
  switch (config_.head) {
    case HeadKind::kDense:
      dense_->save(os);
      break;
    case HeadKind::kFactored:
      factored_->save(os);
      break;
    case HeadKind::kHsm:
      hsm_->save(os);
      break;
  }
  if (!os) throw DataError("failed to write model checkpoint");
}

NgramModel NgramModel::load(std::istream& is) {
  if (io::read_u32(is) != kCheckpointMagic)
    throw DataError("not a model checkpoint");
  NgramModel model;
  ModelConfig& c = model.config_;
  c.vocab_size = io::read_u64(is);
  c.context_len = io::read_u64(is);
  c.emb_dim = io::read_u64(is);
  std::size_t layers = io::read_u64(is);
  c.hidden_sizes.resize(layers);
  for (auto& s : c.hidden_sizes) s = io::read_u64(is);
  c.activation = activation_from_name(io::read_string(is));
  c.head = head_kind_from_name(io::read_string(is));
  c.loss = loss_kind_from_name(io::read_string(is));
  c.zparams.a = io::read_f64(is);
  c.zparams.b = io::read_f64(is);
  c.seed = io::read_u64(is);
  c.init_scale = io::read_f64(is);
  c.output_bias = io::read_u32(is) != 0;
  c.refactor_period = io::read_u64(is);
  model.embedding_ = Matrix(c.vocab_size, c.emb_dim);
  is.read(reinterpret_cast<char*>(model.embedding_.data()),
          static_cast<std::streamsize>(model.embedding_.size() *
                                       sizeof(double)));
  std::size_t in = c.context_len * c.emb_dim;
  for (std::size_t s : c.hidden_sizes) {
    model.hidden_.emplace_back(s, in);
    is.read(reinterpret_cast<char*>(model.hidden_.back().data()),
            static_cast<std::streamsize>(model.hidden_.back().size() *
                                         sizeof(double)));
    in = s;
  }
  if (!is) throw DataError("truncated model checkpoint");
  switch (c.head) {
    case HeadKind::kDense:
      model.dense_ = std::make_unique<DenseHead>(DenseHead::load(is));
      break;
    case HeadKind::kFactored:
      model.factored_ = std::make_unique<FactoredLayer>(FactoredLayer::load(is));
      break;
    case HeadKind::kHsm:
      model.hsm_ = std::make_unique<HSoftmaxHead>(HSoftmaxHead::load(is));
      break;
  }
  return model;
}

}  // namespace zloss
