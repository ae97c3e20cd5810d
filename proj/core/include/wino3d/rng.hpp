// Copyright 2026 The wino3d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WINO3D_RNG_HPP_
#define WINO3D_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wino3d {

/// Counter-based generator: draw i is a SplitMix64 finalizer applied to
/// (key + i * golden). Streams are derived by hashing the key with a stream
/// id, so `split` never perturbs the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (cosine branch); consumes two draws.
  double normal();

  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::vector<double> rng_normal(Rng& rng, std::size_t n);

template <typename T>
void fill_normal(Rng& rng, std::vector<T>& out, double scale = 1.0) {
  for (auto& v : out) v = static_cast<T>(scale * rng.normal());
}

template <typename T>
void fill_uniform(Rng& rng, std::vector<T>& out, double lo, double hi) {
  for (auto& v : out) v = static_cast<T>(lo + (hi - lo) * rng.uniform());
}

}  // namespace wino3d

#endif  // WINO3D_RNG_HPP_
