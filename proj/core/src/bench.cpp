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

#include "zloss/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "zloss/corpus.hpp"
#include "zloss/rng.hpp"

namespace zloss {

namespace {

using Clock = std::chrono::steady_clock;

Vec random_hidden(Rng& rng, std::size_t dim) {
  Vec h(dim);
  double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : h) v = rng.gaussian() * scale;
  return h;
}

}  // namespace

double bench_output_layer(HeadKind head, LossKind loss,
                          const ZLossParams& zparams, std::size_t num_classes,
                          std::size_t dim, std::size_t steps,
                          std::uint64_t seed) {
  Rng rng(seed);
  const double eta = 0.01;
  std::size_t warmup = std::max<std::size_t>(steps / 10, 8);
  // pre-draw inputs so RNG cost stays out of the timed region
  std::vector<Vec> hs;
  std::vector<std::size_t> targets;
  hs.reserve(warmup + steps);
  for (std::size_t i = 0; i < warmup + steps; ++i) {
    hs.push_back(random_hidden(rng, dim));
    targets.push_back(rng.index(num_classes));
  }

  auto run = [&](auto&& step_fn) {
    for (std::size_t i = 0; i < warmup; ++i) step_fn(hs[i], targets[i]);
    auto t0 = Clock::now();
    for (std::size_t i = warmup; i < warmup + steps; ++i)
      step_fn(hs[i], targets[i]);
    return std::chrono::duration<double>(Clock::now() - t0).count() /
           static_cast<double>(steps);
  };

  switch (head) {
    case HeadKind::kDense: {
      DenseHead dense(num_classes, dim, 0.1, seed);
      return run([&](const Vec& h, std::size_t c) {
        dense.step(h, c, loss, zparams, eta);
      });
    }
    case HeadKind::kFactored: {
      FactoredLayerConfig fc;
      fc.init_scale = 0.1;
      fc.refactor_period = 0;  // timing the steady-state per-step cost
      FactoredLayer layer(num_classes, dim, seed, fc);
      return run([&](const Vec& h, std::size_t c) {
        auto cache = layer.forward(h, c);
        SphericalEval se = spherical_eval(loss, cache.stats, &zparams);
        layer.input_grad(cache, se.grad);
        layer.sgd_update(cache, se.grad, eta);
      });
    }
    case HeadKind::kHsm: {
      std::vector<std::uint64_t> freqs(num_classes, 1);
      Clustering clustering = build_frequency_clusters(
          freqs, default_cluster_count(num_classes));
      HSoftmaxHead hsm(std::move(clustering), dim, 0.1, seed);
      return run(
          [&](const Vec& h, std::size_t c) { hsm.step(h, c, eta); });
    }
  }
  throw ConfigError("bad head kind");
}

double bench_whole_model(HeadKind head, LossKind loss,
                         const ZLossParams& zparams, std::size_t num_classes,
                         std::size_t dim, std::size_t batch, std::size_t steps,
                         std::uint64_t seed) {
  ModelConfig mc;
  mc.vocab_size = num_classes;
  mc.context_len = 6;
  mc.emb_dim = 64;
  mc.hidden_sizes = {dim};
  mc.head = head;
  mc.loss = head == HeadKind::kHsm ? LossKind::kLogSoftmax : loss;
  mc.zparams = zparams;
  mc.seed = seed;
  mc.refactor_period = 0;
  NgramModel model(mc);

  std::size_t warmup = std::max<std::size_t>(steps / 10, batch);
  std::size_t total = warmup + steps;
  NgramDataset data;
  data.context_len = mc.context_len;
  data.contexts.resize(total * mc.context_len);
  data.targets.resize(total);
  Rng rng(seed + 1);
  for (auto& v : data.contexts)
    v = static_cast<std::uint32_t>(rng.index(num_classes));
  for (auto& v : data.targets)
    v = static_cast<std::uint32_t>(rng.index(num_classes));

  const double eta = 0.01;
  NgramModel::HiddenCache cache;
  NgramModel::GradBuffer buffer;
  struct Pending {
    Vec h;
    std::uint32_t target;
    SphericalGrad spherical;
    Vec dense_grad;
    HSoftmaxHead::Workspace hsm;
  };
  std::vector<Pending> pending;

  // same three phases as the trainer, without any evaluation passes
  auto run_batch = [&](std::size_t begin, std::size_t end) {
    pending.clear();
    buffer.clear();
    for (std::size_t i = begin; i < end; ++i) {
      Pending p;
      p.target = data.targets[i];
      p.h = model.forward_hidden(data.context(i), &cache);
      Vec g_h;
      switch (head) {
        case HeadKind::kDense: {
          Vec o = model.dense_head().scores(p.h);
          DenseEval eval = dense_eval(mc.loss, o, p.target, zparams);
          g_h.resize(model.head_dim());
          matvec_transpose(model.dense_head().weights(), eval.grad, g_h);
          if (is_spherical(mc.loss)) {
            p.spherical =
                spherical_eval(mc.loss, stats_from_outputs(o, p.target),
                               &zparams)
                    .grad;
          } else {
            p.dense_grad = std::move(eval.grad);
          }
          break;
        }
        case HeadKind::kFactored: {
          auto fc = model.factored_head().forward(p.h, p.target);
          SphericalEval se = spherical_eval(mc.loss, fc.stats, &zparams);
          p.spherical = se.grad;
          g_h = model.factored_head().input_grad(fc, se.grad);
          break;
        }
        case HeadKind::kHsm: {
          p.hsm = model.hsm_head().forward_backward(p.h, p.target);
          g_h = p.hsm.input_grad;
          break;
        }
      }
      model.accumulate_backward(cache, g_h, buffer);
      pending.push_back(std::move(p));
    }
    double step = eta / static_cast<double>(end - begin);
    for (const Pending& p : pending) {
      switch (head) {
        case HeadKind::kDense:
          if (is_spherical(mc.loss))
            model.dense_head().apply_spherical_grad(p.h, p.target,
                                                    p.spherical, step);
          else
            model.dense_head().apply_dense_grad(p.h, p.dense_grad, step);
          break;
        case HeadKind::kFactored:
          model.factored_head().sgd_update_deferred(p.h, p.target, p.spherical,
                                                    step);
          break;
        case HeadKind::kHsm:
          model.hsm_head().apply(p.hsm, p.h, step);
          break;
      }
    }
    model.apply_gradients(buffer, eta);
  };

  auto run_pass = [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; b += batch)
      run_batch(b, std::min(b + batch, end));
  };

  run_pass(0, warmup);
  auto t0 = Clock::now();
  run_pass(warmup, total);
  double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  return elapsed / static_cast<double>(steps);
}

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  std::vector<BenchRow> rows;
  for (HeadKind head : config.heads) {
    for (std::size_t d_classes : config.class_counts) {
      BenchRow row;
      row.head = head_kind_name(head);
      LossKind loss = head == HeadKind::kDense ? config.dense_loss
                      : head == HeadKind::kFactored ? LossKind::kZLoss
                                                    : LossKind::kLogSoftmax;
      row.loss = head == HeadKind::kHsm ? "hsm" : loss_kind_name(loss);
      row.num_classes = d_classes;
      row.dim = config.dim;
      row.batch = config.batch;
      row.steps = config.steps;
      double per_example = bench_output_layer(head, loss, config.zparams,
                                              d_classes, config.dim,
                                              config.steps, config.seed);
      row.sec_per_1k_examples_output_only = per_example * 1000.0;
      if (config.include_total) {
        double total = bench_whole_model(head, loss, config.zparams, d_classes,
                                         config.dim, config.batch,
                                         config.steps, config.seed);
        row.sec_per_1k_examples_total = total * 1000.0;
        row.extrapolated_epoch_seconds = total * config.epoch_examples;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out =
      "head,loss,D,d,batch,steps,sec_per_1k_examples_output_only,"
      "sec_per_1k_examples_total,extrapolated_epoch_seconds\n";
  char buf[256];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%zu,%zu,%zu,%.6g,%.6g,%.6g\n",
                  r.head.c_str(), r.loss.c_str(), r.num_classes, r.dim,
                  r.batch, r.steps, r.sec_per_1k_examples_output_only,
                  r.sec_per_1k_examples_total, r.extrapolated_epoch_seconds);
    out += buf;
  }
  return out;
}

}  // namespace zloss
