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

#include "himo/autolabel.hpp"
#include "himo/comp.hpp"
#include "himo/nn_index.hpp"

namespace himo {

/// Representative flow per dynamic cluster: the anchor is the cluster point
/// with the largest nearest-neighbor distance into the next frame's dynamic
/// set, and the cluster flow is that anchor's displacement to its nearest
/// dynamic neighbor.
struct ClusterFlowSummary {
  struct Entry {
    Vec3 flow = Vec3::Zero();
    int anchor_index = -1;     // point index in the current frame
    int anchor_nn_index = -1;  // index into the next frame's dynamic subset
    double anchor_distance = 0.0;
  };
  std::vector<Entry> entries;  // one per dynamic cluster, cluster order
};

namespace detail {

/// Anchor selection and representative flow for one cluster. Ties on the
/// anchor distance resolve to the lowest point index.
inline ClusterFlowSummary::Entry cluster_upper_bound(
    const Frame& cur, std::span<const int> members, const NNIndex& next_dynamic) {
  ClusterFlowSummary::Entry entry;
  double best = -1.0;
  for (int i : members) {
    double d = next_dynamic.nearest(cur.points[i].position).distance;
    if (d > best) {
      best = d;
      entry.anchor_index = i;
    }
  }
  entry.anchor_distance = best;
  NNResult nn = next_dynamic.nearest(cur.points[entry.anchor_index].position);
  entry.anchor_nn_index = nn.index;
  entry.flow = next_dynamic.point(nn.index) - cur.points[entry.anchor_index].position;
  return entry;
}

}  // namespace detail

/// Upper-bound estimator: every point of a dynamic cluster receives the
/// cluster's representative flow; static points receive zero.
inline std::pair<FlowField, ClusterFlowSummary> estimate_upper_bound(
    const Frame& cur, const Frame& next, const DynamicLabels& cur_labels,
    const DynamicLabels& next_labels) {
  std::vector<Vec3> next_dyn;
  for (std::size_t i = 0; i < next.size(); ++i)
    if (next_labels.dynamic[i]) next_dyn.push_back(next.points[i].position);

  auto clusters = cur_labels.dynamic_clusters();
  FlowField flow = FlowField::zeros(cur.size(), cur.t_sensor);
  ClusterFlowSummary summary;
  if (clusters.empty()) return {flow, summary};
  if (next_dyn.empty()) throw std::runtime_error("no dynamic target");

  NNIndex index(std::move(next_dyn));
  for (const auto& members : clusters) {
    auto entry = detail::cluster_upper_bound(cur, members, index);
    for (int i : members) flow.vectors[i] = entry.flow;
    summary.entries.push_back(entry);
  }
  return {flow, summary};
}

}  // namespace himo
