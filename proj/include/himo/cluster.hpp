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

#include <algorithm>
#include <vector>

#include "himo/frame.hpp"
#include "himo/nn_index.hpp"

namespace himo {

/// Result of density clustering. `assignment` is index-aligned with the
/// frame (-1 = unclustered/noise, including ground points); every clustered
/// point appears in exactly one member list.
struct ClusterSet {
  std::vector<int> assignment;
  std::vector<std::vector<int>> clusters;  // ascending member indices

  int n_clusters() const { return static_cast<int>(clusters.size()); }
};

struct ClusterParams {
  double radius = 0.8;  // neighbor linkage distance, meters
  int min_size = 10;    // smaller components become noise
};

/// Density-based clustering of non-ground points: connected components under
/// the neighbor radius, with small components discarded as noise. Cluster ids
/// are assigned by ascending lowest member index, so output is deterministic.
inline ClusterSet cluster(const Frame& frame, const ClusterParams& params = {}) {
  ClusterSet out;
  out.assignment.assign(frame.size(), -1);

  std::vector<int> active = frame.non_ground_indices();
  if (active.empty()) return out;
  std::vector<Vec3> positions;
  positions.reserve(active.size());
  for (int i : active) positions.push_back(frame.points[i].position);
  NNIndex index(positions);

  std::vector<char> visited(active.size(), 0);
  std::vector<int> stack, neighbors, component;
  for (std::size_t seed = 0; seed < active.size(); ++seed) {
    if (visited[seed]) continue;
    component.clear();
    stack.assign(1, static_cast<int>(seed));
    visited[seed] = 1;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      component.push_back(cur);
      index.radius_search(positions[cur], params.radius, neighbors);
      for (int nb : neighbors) {
        if (!visited[nb]) {
          visited[nb] = 1;
          stack.push_back(nb);
        }
      }
    }
    if (static_cast<int>(component.size()) < params.min_size) continue;
    int id = out.n_clusters();
    std::vector<int> members;
    members.reserve(component.size());
    for (int local : component) members.push_back(active[local]);
    std::sort(members.begin(), members.end());
    for (int global : members) out.assignment[global] = id;
    out.clusters.push_back(std::move(members));
  }
  return out;
}

}  // namespace himo
