// Copyright 2026 The covrnn Authors
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
#ifndef COVRNN_RNG_H_
#define COVRNN_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace covrnn {

/// Mixes a master seed with stream coordinates into an independent seed.
/// Used so that trial k at step t always sees the same random stream no
/// matter which thread evaluates it.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords);

/// Stream tags for derive_seed.
enum class Stream : std::uint64_t {
  kInitState = 1,
  kSelect = 2,
  kAccept = 3,
  kProgram = 4,
  kBootstrap = 5,
};

/// Thin wrapper over mt19937_64 with portable distributions (the standard
/// distributions are implementation-defined, which would break
/// byte-reproducible logs across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
};

}  // namespace covrnn

#endif  // COVRNN_RNG_H_
