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

#include <vector>

#include "himo/autolabel.hpp"
#include "himo/chamfer.hpp"
#include "himo/comp.hpp"
#include "himo/flow_upper_bound.hpp"

namespace himo {

/// Four-term self-supervised objective, evaluated as a measurement (no
/// training here). Chamfer terms are in meters, the static and cluster terms
/// in squared meters; total is their plain sum.
struct LossReport {
  double l_cham = 0.0;    // symmetric Chamfer over all points
  double l_dcham = 0.0;   // symmetric Chamfer over dynamic points
  double l_static = 0.0;  // mean squared flow norm over static points
  double l_dcls = 0.0;    // mean squared deviation from the cluster flow
  double total = 0.0;
};

/// Evaluates the loss of `flow` on a co-registered frame triple.
///
/// l_cham applies the forward flow toward the next frame and the negated
/// flow toward the previous frame; l_dcham is the same restricted to
/// dynamic points on both sides; l_static averages squared flow norms over
/// static points; l_dcls averages squared deviations from each dynamic
/// cluster's representative flow. Ground points are excluded throughout,
/// invalid flow entries count as zero, and empty dynamic sets zero the
/// dynamic terms by convention (logged).
inline LossReport loss_report(const Frame& prev, const Frame& cur, const Frame& next,
                              const FlowField& flow, const DynamicLabels& prev_labels,
                              const DynamicLabels& cur_labels,
                              const DynamicLabels& next_labels) {
  if (flow.size() != cur.size()) throw std::invalid_argument("flow/frame mismatch");

  auto flow_at = [&](int i) { return flow.valid[i] ? flow.vectors[i] : Vec3::Zero(); };

  std::vector<Vec3> moved_next, moved_prev, dyn_moved_next, dyn_moved_prev, static_flows;
  for (int i : cur.non_ground_indices()) {
    const Vec3& p = cur.points[i].position;
    Vec3 f = flow_at(i);
    moved_next.push_back(p + f);
    moved_prev.push_back(p - f);
    if (cur_labels.dynamic[i]) {
      dyn_moved_next.push_back(p + f);
      dyn_moved_prev.push_back(p - f);
    } else {
      static_flows.push_back(f);
    }
  }

  auto collect = [](const Frame& f, const DynamicLabels* labels, bool dynamic_only) {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f.points[i].ground) continue;
      if (dynamic_only && !(*labels).dynamic[i]) continue;
      out.push_back(f.points[i].position);
    }
    return out;
  };
  std::vector<Vec3> next_all = collect(next, nullptr, false);
  std::vector<Vec3> prev_all = collect(prev, nullptr, false);
  std::vector<Vec3> next_dyn = collect(next, &next_labels, true);
  std::vector<Vec3> prev_dyn = collect(prev, &prev_labels, true);

  LossReport report;
  report.l_cham = chamfer(moved_next, next_all) + chamfer(moved_prev, prev_all);

  if (dyn_moved_next.empty() || next_dyn.empty() || prev_dyn.empty()) {
    warn("loss: empty dynamic set, dynamic terms are zero by convention");
  } else {
    report.l_dcham = chamfer(dyn_moved_next, next_dyn) + chamfer(dyn_moved_prev, prev_dyn);

    NNIndex next_dyn_index(next_dyn);
    double sum = 0.0;
    std::size_t n_dyn = 0;
    for (const auto& members : cur_labels.dynamic_clusters()) {
      auto entry = detail::cluster_upper_bound(cur, members, next_dyn_index);
      for (int i : members) {
        sum += (flow_at(i) - entry.flow).squaredNorm();
        ++n_dyn;
      }
    }
    if (n_dyn > 0) report.l_dcls = sum / static_cast<double>(n_dyn);
  }

  if (!static_flows.empty()) {
    double sum = 0.0;
    for (const auto& f : static_flows) sum += f.squaredNorm();
    report.l_static = sum / static_cast<double>(static_flows.size());
  }

  report.total = report.l_cham + report.l_dcham + report.l_static + report.l_dcls;
  return report;
}

}  // namespace himo
