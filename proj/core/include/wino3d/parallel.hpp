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

#ifndef WINO3D_PARALLEL_HPP_
#define WINO3D_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace wino3d {

/// Thread count from WINO3D_THREADS, default 1.
int default_threads();

/// Splits [0, n) into contiguous chunks, one per worker. Every index is
/// handled by exactly one worker, so per-index results do not depend on the
/// thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace wino3d

#endif  // WINO3D_PARALLEL_HPP_
