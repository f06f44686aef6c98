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

#ifndef ZLOSS_TESTS_SUPPORT_SYNTHETIC_HPP_
#define ZLOSS_TESTS_SUPPORT_SYNTHETIC_HPP_

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "zloss/rng.hpp"

namespace zloss::testing {

/// One line of distinct tokens. Every n-gram context then determines its
/// successor uniquely, so a model can reach exactly zero training error.
inline std::string toy_deterministic_corpus(std::size_t n_tokens) {
  std::ostringstream out;
  for (std::size_t i = 0; i < n_tokens; ++i)
    out << (i ? " " : "") << "w" << i;
  out << "\n";
  return out.str();
}

/// Synthetic bigram language for trend experiments. Each word has one
/// likely "easy" successor plus a broad Zipf-distributed candidate set, so
/// a trained model faces a mix of near-deterministic and genuinely
/// ambiguous predictions.
struct BigramLanguage {
  std::size_t vocab;
  double p_easy;
  std::size_t tail_size;

  std::size_t easy_successor(std::size_t w) const {
    return (w * 2654435761u + 17) % vocab;
  }
  std::size_t tail_candidate(std::size_t w, std::size_t slot) const {
    return (w * 40503u + slot * 2654435761u + 9176) % vocab;
  }

  std::size_t next(std::size_t w, Rng& rng) const {
    if (rng.uniform01() < p_easy) return easy_successor(w);
    // Zipf over the candidate slots: slot k with weight 1/(k+1)
    double total = 0.0;
    for (std::size_t k = 0; k < tail_size; ++k)
      total += 1.0 / static_cast<double>(k + 1);
    double u = rng.uniform01() * total;
    for (std::size_t k = 0; k < tail_size; ++k) {
      u -= 1.0 / static_cast<double>(k + 1);
      if (u <= 0.0) return tail_candidate(w, k);
    }
    return tail_candidate(w, tail_size - 1);
  }

  std::string sample_corpus(std::size_t n_sentences, std::uint64_t seed) const {
    Rng rng(seed);
    std::ostringstream out;
    for (std::size_t s = 0; s < n_sentences; ++s) {
      std::size_t len = 12 + rng.index(9);
      std::size_t w = rng.index(vocab);
      for (std::size_t i = 0; i < len; ++i) {
        out << "t" << w << (i + 1 == len ? "" : " ");
        w = next(w, rng);
      }
      out << "\n";
    }
    return out.str();
  }
};

}  // namespace zloss::testing

#endif  // ZLOSS_TESTS_SUPPORT_SYNTHETIC_HPP_
