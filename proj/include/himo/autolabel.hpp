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
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "himo/cluster.hpp"
#include "himo/common.hpp"
#include "himo/freespace.hpp"
#include "himo/frame.hpp"
#include "himo/nn_index.hpp"

namespace himo {

/// Per-point dynamic flag and cluster id from the auto-labeler. The dynamic
/// flag is constant within each cluster; `ratios` keeps the per-cluster
/// classifier agreement pair for diagnostics.
struct DynamicLabels {
  std::vector<std::uint8_t> dynamic;
  std::vector<int> cluster;
  std::vector<std::pair<double, double>> ratios;  // (r1, r2) per cluster
  int unclustered_dynamic_hits = 0;

  std::size_t size() const { return dynamic.size(); }

  /// Member lists of clusters labeled dynamic, ascending indices.
  std::vector<std::vector<int>> dynamic_clusters() const {
    int n_clusters = 0;
    for (int c : cluster) n_clusters = std::max(n_clusters, c + 1);
    std::vector<std::vector<int>> members(n_clusters);
    for (std::size_t i = 0; i < cluster.size(); ++i)
      if (cluster[i] >= 0 && dynamic[i]) members[cluster[i]].push_back(static_cast<int>(i));
    std::erase_if(members, [](const auto& m) { return m.empty(); });
    return members;
  }

  std::vector<int> dynamic_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < dynamic.size(); ++i)
      if (dynamic[i]) out.push_back(static_cast<int>(i));
    return out;
  }
};

/// Threshold-based nearest-neighbor classifier: non-ground points of `cur`
/// whose nearest non-ground neighbor in `next` is farther than tau_d. Both
/// frames must be ego-compensated into a common frame.
inline std::vector<int> dynamic_nn(const Frame& cur, const Frame& next, double tau_d = 0.25) {
  std::vector<Vec3> target;
  for (const auto& p : next.points)
    if (!p.ground) target.push_back(p.position);
  if (target.empty()) throw std::invalid_argument("empty point set");
  NNIndex index(std::move(target));

  std::vector<int> query = cur.non_ground_indices();
  std::vector<std::uint8_t> flags(query.size(), 0);
  parallel_for(query.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t qi = begin; qi < end; ++qi) {
      const Vec3& p = cur.points[query[qi]].position;
      if (index.nearest(p).distance > tau_d) flags[qi] = 1;
    }
  });
  std::vector<int> out;
  for (std::size_t qi = 0; qi < query.size(); ++qi)
    if (flags[qi]) out.push_back(query[qi]);
  return out;
}

/// Fuses the two point-level classifiers cluster-wise: with r1 and r2 the
/// fractions of a cluster flagged by the free-space and the NN classifier,
/// the whole cluster is dynamic iff min(r1, r2) >= tau1 and
/// max(r1, r2) >= tau2. Noise points stay static; classifier hits on them
/// are counted and logged.
inline DynamicLabels reassign(const ClusterSet& clusters, std::span<const int> p_dufo,
                              std::span<const int> p_nnd, double tau1 = 0.3,
                              double tau2 = 0.8) {
  if (!(tau1 >= 0.0 && tau1 <= tau2 && tau2 <= 1.0))
    throw std::invalid_argument("thresholds must satisfy 0 <= tau1 <= tau2 <= 1");
  std::size_t n = clusters.assignment.size();
  std::vector<std::uint8_t> in_dufo(n, 0), in_nnd(n, 0);
  for (int i : p_dufo) in_dufo[i] = 1;
  for (int i : p_nnd) in_nnd[i] = 1;

  DynamicLabels labels;
  labels.dynamic.assign(n, 0);
  labels.cluster = clusters.assignment;
  labels.ratios.reserve(clusters.clusters.size());

  for (const auto& members : clusters.clusters) {
    int hits1 = 0, hits2 = 0;
    for (int i : members) {
      hits1 += in_dufo[i];
      hits2 += in_nnd[i];
    }
    double r1 = static_cast<double>(hits1) / members.size();
    double r2 = static_cast<double>(hits2) / members.size();
    labels.ratios.emplace_back(r1, r2);
    bool dynamic = std::min(r1, r2) >= tau1 && std::max(r1, r2) >= tau2;
    if (dynamic)
      for (int i : members) labels.dynamic[i] = 1;
  }

  for (std::size_t i = 0; i < n; ++i)
    if (clusters.assignment[i] < 0 && (in_dufo[i] || in_nnd[i]))
      ++labels.unclustered_dynamic_hits;
  if (labels.unclustered_dynamic_hits > 0)
    warn("reassign: " + std::to_string(labels.unclustered_dynamic_hits) +
         " unclustered points hit by a dynamic classifier were kept static");
  return labels;
}

}  // namespace himo
