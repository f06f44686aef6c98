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

#include <benchmark/benchmark.h>

#include "zloss/dense_head.hpp"
#include "zloss/factored_layer.hpp"
#include "zloss/hsoftmax.hpp"
#include "zloss/losses.hpp"
#include "zloss/rng.hpp"

namespace {

using namespace zloss;

Vec random_hidden(Rng& rng, std::size_t dim) {
  Vec h(dim);
  double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : h) v = rng.gaussian() * scale;
  return h;
}

void BM_MatVec(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Matrix a(n, n);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng.gaussian();
  Vec x = random_hidden(rng, n);
  Vec out(n);
  for (auto _ : state) {
    matvec(a, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_MatVec)->Arg(64)->Arg(128)->Arg(512);

void BM_AddOuter(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Matrix a(n, n);
  Vec u = random_hidden(rng, n);
  Vec v = random_hidden(rng, n);
  for (auto _ : state) {
    add_outer(a, 1e-9, u, v);
    benchmark::DoNotOptimize(a.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_AddOuter)->Arg(64)->Arg(128)->Arg(512);

// Per-example cost of one full training touch (forward + loss + input
// gradient + update). The factored head's time should not move with D.
void BM_FactoredStep(benchmark::State& state) {
  std::size_t d_classes = static_cast<std::size_t>(state.range(0));
  std::size_t dim = static_cast<std::size_t>(state.range(1));
  FactoredLayerConfig cfg;
  cfg.init_scale = 0.1;
  cfg.refactor_period = 0;
  FactoredLayer layer(d_classes, dim, 3, cfg);
  ZLossParams zp{0.1, 10.0};
  Rng rng(4);
  Vec h = random_hidden(rng, dim);
  std::size_t c = 0;
  for (auto _ : state) {
    auto cache = layer.forward(h, c);
    SphericalEval se = spherical_eval(LossKind::kZLoss, cache.stats, &zp);
    benchmark::DoNotOptimize(layer.input_grad(cache, se.grad).data());
    layer.sgd_update(cache, se.grad, 0.01);
    c = (c + 1) % d_classes;
  }
}
BENCHMARK(BM_FactoredStep)
    ->Args({10000, 128})
    ->Args({100000, 128})
    ->Args({10000, 512})
    ->Args({100000, 512});

void BM_DenseStep(benchmark::State& state) {
  std::size_t d_classes = static_cast<std::size_t>(state.range(0));
  std::size_t dim = static_cast<std::size_t>(state.range(1));
  DenseHead head(d_classes, dim, 0.1, 3);
  Rng rng(4);
  Vec h = random_hidden(rng, dim);
  std::size_t c = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        head.step(h, c, LossKind::kLogSoftmax, {}, 0.01).value);
    c = (c + 1) % d_classes;
  }
}
BENCHMARK(BM_DenseStep)->Args({10000, 128})->Args({100000, 128});

void BM_HsmStep(benchmark::State& state) {
  std::size_t d_classes = static_cast<std::size_t>(state.range(0));
  std::size_t dim = static_cast<std::size_t>(state.range(1));
  std::vector<std::uint64_t> freqs(d_classes, 1);
  HSoftmaxHead head(
      build_frequency_clusters(freqs, default_cluster_count(d_classes)), dim,
      0.1, 3);
  Rng rng(4);
  Vec h = random_hidden(rng, dim);
  std::size_t c = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(head.step(h, c, 0.01).value);
    c = (c + 1) % d_classes;
  }
}
BENCHMARK(BM_HsmStep)->Args({10000, 128})->Args({100000, 128});

void BM_SphericalEval(benchmark::State& state) {
  SphericalStats stats{10.0, 250.0, 2.0, 100000, 42};
  ZLossParams zp{0.1, 10.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        spherical_eval(LossKind::kZLoss, stats, &zp).value);
  }
}
BENCHMARK(BM_SphericalEval);

}  // namespace

BENCHMARK_MAIN();
