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

#include "zloss/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <thread>

namespace zloss {

PlateauMetric plateau_metric_from_name(const std::string& name) {
  if (name == "top1") return PlateauMetric::kTop1;
  if (name == "top5") return PlateauMetric::kTop5;
  if (name == "mrr") return PlateauMetric::kMrr;
  throw ConfigError("unknown plateau metric: " + name);
}

const char* plateau_metric_name(PlateauMetric m) {
  switch (m) {
    case PlateauMetric::kTop1:
      return "top1";
    case PlateauMetric::kTop5:
      return "top5";
    case PlateauMetric::kMrr:
      return "mrr";
  }
  return "?";
}

void TrainConfig::validate(std::size_t vocab_size) const {
  if (eta0 <= 0.0) throw ConfigError("eta0 must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (plateau_factor <= 0.0 || plateau_factor >= 1.0)
    throw ConfigError("plateau factor must be in (0, 1)");
  if (k_set.empty()) throw ConfigError("k set must be non-empty");
  for (std::size_t k : k_set) {
    if (k < 1) throw ConfigError("k values must be >= 1");
    if (k >= vocab_size)
      throw ConfigError("k values must be smaller than the vocabulary");
  }
  auto has_k = [&](std::size_t k) {
    for (std::size_t v : k_set)
      if (v == k) return true;
    return false;
  };
  if (plateau_metric == PlateauMetric::kTop1 && !has_k(1))
    throw ConfigError("plateau metric top1 needs 1 in the k set");
  if (plateau_metric == PlateauMetric::kTop5 && !has_k(5))
    throw ConfigError("plateau metric top5 needs 5 in the k set");
}

std::string TrainRecord::to_json() const {
  char buf[96];
  std::string out = "{\"examples_seen\": " + std::to_string(examples_seen);
  std::snprintf(buf, sizeof(buf), ", \"wall_seconds\": %.6f", wall_seconds);
  out += buf;
  std::snprintf(buf, sizeof(buf), ", \"eta\": %.12g", eta);
  out += buf;
  std::snprintf(buf, sizeof(buf), ", \"train_loss\": %.12g", train_loss);
  out += buf;
  out += ", \"degenerate_skipped\": " + std::to_string(degenerate_skipped);
  out += ", \"valid\": " + valid.to_json() + "}";
  return out;
}

std::size_t eval_worker_count() {
  std::size_t hw = std::thread::hardware_concurrency();
  std::size_t workers = std::min<std::size_t>(hw == 0 ? 1 : hw, 4);
  if (const char* env = std::getenv("ZLOSS_NUM_EVAL_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) workers = static_cast<std::size_t>(v);
  }
  return workers;
}

MetricsReport evaluate(const NgramModel& model, const NgramDataset& data,
                       std::span<const std::size_t> k_set) {
  if (data.size() == 0) throw DataError("empty evaluation set");
  for (std::size_t k : k_set)
    if (k < 1 || k >= model.config().vocab_size)
      throw ConfigError("k must be in [1, vocab)");
  std::size_t workers = std::min(eval_worker_count(), data.size());

  auto run_shard = [&](std::size_t begin, std::size_t end,
                       RankAccumulator& acc) {
    for (std::size_t i = begin; i < end; ++i) {
      Vec h = model.forward_hidden(data.context(i));
      Vec scores = model.full_scores(h);
      acc.add(rank_of_target(scores, data.targets[i]));
    }
  };

  if (workers <= 1) {
    RankAccumulator acc(k_set);
    run_shard(0, data.size(), acc);
    return acc.report();
  }

  std::vector<RankAccumulator> partials(workers, RankAccumulator(k_set));
  std::vector<std::thread> threads;
  std::size_t chunk = (data.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(begin + chunk, data.size());
    if (begin >= end) break;
    threads.emplace_back(run_shard, begin, end, std::ref(partials[w]));
  }
  for (auto& t : threads) t.join();
  RankAccumulator total = partials[0];
  for (std::size_t w = 1; w < workers; ++w) total.merge(partials[w]);
  return total.report();
}

namespace {

// Per-example state carried from the pre-batch forward pass to the
// sequential head updates.
struct PendingUpdate {
  Vec h;
  std::uint32_t target = 0;
  SphericalGrad spherical;
  Vec dense_grad;  // dense-only losses
  HSoftmaxHead::Workspace hsm;
  bool skip = false;
};

double plateau_value(const MetricsReport& report, PlateauMetric metric) {
  switch (metric) {
    case PlateauMetric::kTop1:
      return report.topk_error.at(1);
    case PlateauMetric::kTop5:
      return report.topk_error.at(5);
    case PlateauMetric::kMrr:
      return -report.mrr;  // lower is better, uniformly
  }
  return 0.0;
}

}  // namespace

TrainLog train(NgramModel& model, const NgramDataset& train_data,
               const NgramDataset& valid_data, const TrainConfig& config,
               std::ostream* jsonl) {
  if (train_data.size() == 0) throw DataError("empty training set");
  if (valid_data.size() == 0) throw DataError("empty validation set");
  if (train_data.context_len != model.config().context_len)
    throw ConfigError("dataset context length does not match the model");
  config.validate(model.config().vocab_size);

  const LossKind loss = model.config().loss;
  const HeadKind head = model.config().head;
  const ZLossParams& zp = model.config().zparams;

  TrainLog log;
  double eta = config.eta0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_improve = 0;
  std::size_t examples_seen = 0;
  std::size_t next_eval =
      config.eval_every > 0 ? config.eval_every : std::numeric_limits<std::size_t>::max();
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  std::size_t degenerate_since_eval = 0;
  auto start = std::chrono::steady_clock::now();

  auto do_eval = [&]() {
    TrainRecord rec;
    rec.examples_seen = examples_seen;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    rec.eta = eta;
    rec.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count)
                                    : 0.0;
    rec.degenerate_skipped = degenerate_since_eval;
    rec.valid = evaluate(model, valid_data, config.k_set);
    loss_sum = 0.0;
    loss_count = 0;
    degenerate_since_eval = 0;
    if (jsonl) (*jsonl) << rec.to_json() << '\n';
    double value = plateau_value(rec.valid, config.plateau_metric);
    if (value < best) {
      best = value;
      since_improve = 0;
    } else if (++since_improve >= config.plateau_patience) {
      eta *= config.plateau_factor;
      since_improve = 0;
    }
    log.records.push_back(std::move(rec));
  };

  std::vector<PendingUpdate> pending;
  NgramModel::GradBuffer buffer;
  NgramModel::HiddenCache cache;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::optional<std::uint64_t> seed;
    if (config.shuffle)
      seed = config.shuffle_seed * 0x9e3779b97f4a7c15ull + epoch + 1;
    BatchStream stream(train_data.size(), config.batch_size, seed);
    for (auto batch = stream.next(); !batch.empty(); batch = stream.next()) {
      pending.clear();
      buffer.clear();
      // phase 1: forwards and gradients against the pre-batch weights
      for (std::uint32_t idx : batch) {
        PendingUpdate p;
        p.target = train_data.targets[idx];
        p.h = model.forward_hidden(train_data.context(idx), &cache);
        Vec g_h;
        switch (head) {
          case HeadKind::kDense: {
            Vec o = model.dense_head().scores(p.h);
            if (is_spherical(loss)) {
              SphericalEval se =
                  spherical_eval(loss, stats_from_outputs(o, p.target), &zp);
              p.skip = se.degenerate;
              if (!p.skip) {
                loss_sum += se.value;
                // only (alpha, beta, gamma) are kept; the o-dependent part
                // is rebuilt against the current weights at apply time
                p.spherical = se.grad;
                Vec g = dense_grad_from_spherical(o, p.target, se.grad);
                g_h.resize(model.head_dim());
                matvec_transpose(model.dense_head().weights(), g, g_h);
              }
            } else {
              DenseEval eval = dense_eval(loss, o, p.target, zp);
              p.skip = eval.degenerate;
              if (!p.skip) {
                loss_sum += eval.value;
                g_h.resize(model.head_dim());
                matvec_transpose(model.dense_head().weights(), eval.grad,
                                 g_h);
                p.dense_grad = std::move(eval.grad);
              }
            }
            break;
          }
          case HeadKind::kFactored: {
            FactoredLayer& layer = model.factored_head();
            FactoredLayer::ForwardCache fc = layer.forward(p.h, p.target);
            SphericalEval se = spherical_eval(loss, fc.stats, &zp);
            p.skip = se.degenerate;
            if (!p.skip) {
              loss_sum += se.value;
              p.spherical = se.grad;
              g_h = layer.input_grad(fc, se.grad);
            }
            break;
          }
          case HeadKind::kHsm: {
            p.hsm = model.hsm_head().forward_backward(p.h, p.target);
            loss_sum += p.hsm.value;
            g_h = p.hsm.input_grad;
            break;
          }
        }
        if (p.skip) {
          ++degenerate_since_eval;
          ++log.total_degenerate_skipped;
        } else {
          ++loss_count;
          model.accumulate_backward(cache, g_h, buffer);
        }
        pending.push_back(std::move(p));
      }
      // phase 2: sequential head updates at eta / K
      double step = eta / static_cast<double>(batch.size());
      for (const PendingUpdate& p : pending) {
        if (p.skip) continue;
        switch (head) {
          case HeadKind::kDense:
            if (is_spherical(loss))
              model.dense_head().apply_spherical_grad(p.h, p.target,
                                                      p.spherical, step);
            else
              model.dense_head().apply_dense_grad(p.h, p.dense_grad, step);
            break;
          case HeadKind::kFactored:
            try {
              model.factored_head().sgd_update_deferred(p.h, p.target,
                                                        p.spherical, step);
            } catch (const SingularUpdateError&) {
              // retry once from a refactorized state before giving up
              model.factored_head().refactorize();
              model.factored_head().sgd_update_deferred(p.h, p.target,
                                                        p.spherical, step);
            }
            break;
          case HeadKind::kHsm:
            model.hsm_head().apply(p.hsm, p.h, step);
            break;
        }
      }
      // phase 3: hidden stack and embeddings, batch-mean gradient
      model.apply_gradients(buffer, eta);

      examples_seen += batch.size();
      if (examples_seen >= next_eval) {
        do_eval();
        next_eval =
            (examples_seen / config.eval_every + 1) * config.eval_every;
      }
    }
    if (config.eval_every == 0) do_eval();
  }
  if (log.records.empty() || log.records.back().examples_seen < examples_seen)
    do_eval();
  return log;
}

}  // namespace zloss
