// Copyright 2026 The himo Authors
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

#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "himo/nn_index.hpp"

namespace himo {

/// Mean nearest-neighbor distance from every point of `a` into `index_b`.
/// Distances are Euclidean; `squared` switches to squared distances for
/// experimentation and is off everywhere in the scored pipeline.
inline double directed_chamfer(std::span<const Vec3> a, const NNIndex& index_b,
                               bool squared = false) {
  if (a.empty() || index_b.empty()) throw std::invalid_argument("empty point set");
  double sum = 0.0;
  for (const Vec3& p : a) {
    double d = index_b.nearest(p).distance;
    sum += squared ? d * d : d;
  }
  return sum / static_cast<double>(a.size());
}

/// Symmetric Chamfer distance between two point sets:
/// mean NN distance a->b plus mean NN distance b->a.
inline double chamfer(std::span<const Vec3> a, std::span<const Vec3> b,
                      bool squared = false) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty point set");
  NNIndex ia(a), ib(b);
  return directed_chamfer(a, ib, squared) + directed_chamfer(b, ia, squared);
}

/// Chamfer with prebuilt indices (hot paths evaluate many pairs against the
/// same sets).
inline double chamfer(std::span<const Vec3> a, const NNIndex& ia,
                      std::span<const Vec3> b, const NNIndex& ib,
                      bool squared = false) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty point set");
  return directed_chamfer(a, ib, squared) + directed_chamfer(b, ia, squared);
}

}  // namespace himo
