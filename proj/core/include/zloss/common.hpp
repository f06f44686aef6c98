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

#ifndef ZLOSS_COMMON_HPP_
#define ZLOSS_COMMON_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace zloss {

using Vec = std::vector<double>;

/// Bad run configuration (unknown loss kind, incompatible head/loss pairing,
/// malformed flags). CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing input data (empty corpus, id out of range, unreadable
/// file). CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure the caller may be able to recover from. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rank-1 inverse update hit the Sherman-Morrison singularity guard.
/// Callers should refactorize and retry, or shrink the step size.
class SingularUpdateError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// API contract violation: a forward cache was used after the layer moved on.
class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace zloss

#endif  // ZLOSS_COMMON_HPP_
