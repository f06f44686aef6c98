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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support/test_util.hpp"
#include "zloss/dense_head.hpp"
#include "zloss/hsoftmax.hpp"
#include "zloss/losses.hpp"

using namespace zloss;
using zloss::testing::random_gaussian_vec;

TEST_CASE("dense head basics") {
  Rng rng(1);

  SUBCASE("eta = 0 leaves the weights bitwise unchanged") {
    DenseHead head(12, 4, 0.1, 5);
    Matrix before = head.weights();
    Vec h = random_gaussian_vec(rng, 4);
    head.step(h, 3, LossKind::kLogSoftmax, {}, 0.0);
    CHECK(head.weights() == before);
  }

  SUBCASE("logsoftmax with zero weights scores ln D") {
    DenseHead head(16, 4, 0.1, 5);
    head.weights().set_zero();
    Vec h = random_gaussian_vec(rng, 4);
    auto result = head.step(h, 2, LossKind::kLogSoftmax, {}, 0.1);
    CHECK(result.value == doctest::Approx(std::log(16.0)).epsilon(1e-12));
  }

  SUBCASE("step returns the pre-update input gradient") {
    DenseHead head(10, 3, 0.2, 7);
    Matrix w = head.weights();
    Vec h = random_gaussian_vec(rng, 3);
    auto result = head.step(h, 1, LossKind::kMse, {}, 0.5);
    Vec o(10);
    matvec(w, h, o);
    DenseEval eval = dense_eval(LossKind::kMse, o, 1);
    Vec expect(3);
    matvec_transpose(w, eval.grad, expect);
    CHECK(zloss::testing::max_abs_diff(result.input_grad, expect) <= 1e-14);
    CHECK(head.weights() != w);
  }

  SUBCASE("checkpoint round trip") {
    DenseHead head(9, 5, 0.3, 11);
    std::stringstream ss;
    head.save(ss);
    DenseHead loaded = DenseHead::load(ss);
    CHECK(loaded.weights() == head.weights());
  }
}

TEST_CASE("frequency clustering") {
  SUBCASE("m = 1 puts everything in one cluster") {
    std::vector<std::uint64_t> freqs = {3, 1, 4, 1, 5};
    Clustering c = build_frequency_clusters(freqs, 1);
    CHECK(c.num_clusters() == 1);
    CHECK(c.members[0].size() == 5);
  }

  SUBCASE("m = D gives singletons") {
    std::vector<std::uint64_t> freqs = {3, 1, 4};
    Clustering c = build_frequency_clusters(freqs, 3);
    CHECK(c.num_clusters() == 3);
    for (const auto& m : c.members) CHECK(m.size() == 1);
    // clusters ordered by frequency: class 2 (freq 4) leads
    CHECK(c.members[0][0] == 2);
  }

  SUBCASE("hand-enumerated split") {
    std::vector<std::uint64_t> freqs = {5, 4, 3, 2, 1};
    Clustering c = build_frequency_clusters(freqs, 2);
    CHECK(c.members[0] == std::vector<std::uint32_t>{0, 1, 2});
    CHECK(c.members[1] == std::vector<std::uint32_t>{3, 4});
  }

  SUBCASE("ties break by class index and sizes differ by at most one") {
    std::vector<std::uint64_t> freqs(10, 7);
    Clustering c = build_frequency_clusters(freqs, 3);
    CHECK(c.members[0] == std::vector<std::uint32_t>{0, 1, 2, 3});
    CHECK(c.members[1] == std::vector<std::uint32_t>{4, 5, 6});
    CHECK(c.members[2] == std::vector<std::uint32_t>{7, 8, 9});
  }

  SUBCASE("bad cluster counts") {
    std::vector<std::uint64_t> freqs = {1, 2};
    CHECK_THROWS_AS(build_frequency_clusters(freqs, 0), ConfigError);
    CHECK_THROWS_AS(build_frequency_clusters(freqs, 3), ConfigError);
  }

  SUBCASE("default cluster count is ceil(sqrt(D))") {
    CHECK(default_cluster_count(10000) == 100);
    CHECK(default_cluster_count(10001) == 101);
    CHECK(default_cluster_count(2) == 2);
  }
}

TEST_CASE("hsm with one cluster degenerates to the flat softmax") {
  Rng rng(3);
  std::vector<std::uint64_t> freqs(14, 1);
  HSoftmaxHead head(build_frequency_clusters(freqs, 1), 5, 0.2, 9);
  for (int trial = 0; trial < 20; ++trial) {
    Vec h = random_gaussian_vec(rng, 5);
    std::size_t c = rng.index(14);
    auto ws = head.forward_backward(h, c);
    Vec scores(14);
    matvec(head.word_weights(0), h, scores);
    DenseEval flat = dense_eval(LossKind::kLogSoftmax, scores, c);
    CHECK(std::fabs(ws.value - flat.value) <= 1e-10);
    Vec dist = head.full_distribution(h);
    for (std::size_t k = 0; k < 14; ++k) {
      double p = std::exp(-dense_eval(LossKind::kLogSoftmax, scores, k).value);
      CHECK(dist[k] == doctest::Approx(p).epsilon(1e-10));
    }
  }
}

TEST_CASE("hsm full distribution sums to one") {
  Rng rng(5);
  std::vector<std::uint64_t> freqs(37);
  for (auto& f : freqs) f = rng.index(1000);
  HSoftmaxHead head(build_frequency_clusters(freqs, 6), 4, 0.4, 13);
  for (int trial = 0; trial < 25; ++trial) {
    Vec h = random_gaussian_vec(rng, 4, 2.0);
    Vec dist = head.full_distribution(h);
    double sum = 0.0;
    for (double p : dist) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("hsm training touches only the target cluster") {
  Rng rng(7);
  std::vector<std::uint64_t> freqs(20, 1);
  HSoftmaxHead head(build_frequency_clusters(freqs, 4), 3, 0.2, 17);
  std::size_t target = 11;
  std::size_t j = head.clustering().cluster_of[target];
  std::vector<Matrix> before;
  for (std::size_t k = 0; k < 4; ++k) before.push_back(head.word_weights(k));
  Vec h = random_gaussian_vec(rng, 3);
  head.step(h, target, 0.1);
  for (std::size_t k = 0; k < 4; ++k) {
    if (k == j)
      CHECK(head.word_weights(k) != before[k]);
    else
      CHECK(head.word_weights(k) == before[k]);
  }
}

TEST_CASE("hsm weight gradients agree with finite differences") {
  Rng rng(11);
  std::vector<std::uint64_t> freqs(15);
  for (auto& f : freqs) f = 1 + rng.index(50);
  HSoftmaxHead head(build_frequency_clusters(freqs, 4), 4, 0.3, 21);
  Vec h = random_gaussian_vec(rng, 4);
  std::size_t target = 8;
  auto ws = head.forward_backward(h, target);
  const double eps = 1e-6;

  // analytic dW_cluster = cluster_grad h^T, dW_word[j] = word_grad h^T
  double scale = 0.0;
  for (double g : ws.cluster_grad)
    for (double hv : h) scale = std::max(scale, std::fabs(g * hv));
  for (double g : ws.word_grad)
    for (double hv : h) scale = std::max(scale, std::fabs(g * hv));

  auto fd_check = [&](Matrix& w, const Vec& grad_rows) {
    for (std::size_t i = 0; i < w.rows(); ++i)
      for (std::size_t jj = 0; jj < w.cols(); ++jj) {
        double saved = w(i, jj);
        w(i, jj) = saved + eps;
        double up = head.forward_backward(h, target).value;
        w(i, jj) = saved - eps;
        double down = head.forward_backward(h, target).value;
        w(i, jj) = saved;
        double numeric = (up - down) / (2 * eps);
        double analytic = grad_rows[i] * h[jj];
        CHECK(std::fabs(analytic - numeric) <= 1e-6 * std::max(scale, 1.0));
      }
  };
  fd_check(head.cluster_weights(), ws.cluster_grad);
  fd_check(head.word_weights(ws.cluster), ws.word_grad);
}

TEST_CASE("argmax class lives in the cluster attaining the product max") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t d_classes = 10 + rng.index(40);
    std::vector<std::uint64_t> freqs(d_classes);
    for (auto& f : freqs) f = rng.index(100);
    std::size_t m = 2 + rng.index(5);
    HSoftmaxHead head(build_frequency_clusters(freqs, m), 3, 0.5, trial);
    Vec h = random_gaussian_vec(rng, 3, 2.0);
    Vec dist = head.full_distribution(h);
    std::size_t best = 0;
    for (std::size_t k = 1; k < d_classes; ++k)
      if (dist[k] > dist[best]) best = k;
    // brute force the per-cluster maxima
    double best_product = -1.0;
    std::size_t best_cluster = 0;
    for (std::size_t j = 0; j < head.num_clusters(); ++j) {
      double mx = 0.0;
      for (std::uint32_t cls : head.clustering().members[j])
        mx = std::max(mx, dist[cls]);
      if (mx > best_product) {
        best_product = mx;
        best_cluster = j;
      }
    }
    CHECK(head.clustering().cluster_of[best] == best_cluster);
  }
}

TEST_CASE("hsm checkpoint round trip") {
  Rng rng(17);
  std::vector<std::uint64_t> freqs(23);
  for (auto& f : freqs) f = rng.index(40);
  HSoftmaxHead head(build_frequency_clusters(freqs, 5), 4, 0.3, 29);
  Vec h = random_gaussian_vec(rng, 4);
  head.step(h, 7, 0.2);
  std::stringstream ss;
  head.save(ss);
  HSoftmaxHead loaded = HSoftmaxHead::load(ss);
  CHECK(loaded.num_classes() == head.num_classes());
  CHECK(loaded.num_clusters() == head.num_clusters());
  Vec a = head.full_distribution(h);
  Vec b = loaded.full_distribution(h);
  CHECK(zloss::testing::max_abs_diff(a, b) == 0.0);
}
