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
#include <vector>

#include "himo/autolabel.hpp"
#include "himo/comp.hpp"
#include "himo/common.hpp"
#include "himo/nn_index.hpp"

namespace himo {

struct RefineParams {
  double grid_half = 1.0;  // coarse search spans +-grid_half per axis
  double grid_step = 0.1;
  double descent_min_step = 0.01;
  // Chamfer terms are truncated at this distance so the per-cluster
  // objective is not dominated by unrelated clusters elsewhere in the scene.
  double truncation = 5.0;
  // A move is accepted only when it improves the objective by at least this
  // much; resampling interference otherwise drags clusters along their own
  // surface where the objective is flat.
  double min_decrease = 3e-3;
  // Ground vehicles carry no vertical flow, and the beam elevation pattern
  // quantizes the vertical match anyway; search in the ground plane unless
  // vertical corrections are explicitly wanted.
  bool refine_z = false;
  int max_descent_moves = 400;
  // objective subsampling caps (deterministic stride); 0 disables
  int max_cluster_samples = 400;
  int max_target_samples = 600;
  // targets farther than this never influence the truncated objective over
  // the search region and are dropped up front
  double neighborhood = 12.0;
};

/// Objective histories for monotonicity checks, one per refined cluster.
struct RefineReport {
  std::vector<std::vector<double>> objective_history;
};

namespace detail {

inline std::vector<Vec3> stride_sample(const std::vector<Vec3>& pts, int cap) {
  if (cap <= 0 || static_cast<int>(pts.size()) <= cap) return pts;
  std::vector<Vec3> out;
  out.reserve(cap);
  double stride = static_cast<double>(pts.size()) / cap;
  for (int k = 0; k < cap; ++k) out.push_back(pts[static_cast<std::size_t>(k * stride)]);
  return out;
}

/// Truncated symmetric Chamfer of one cluster under a trial correction,
/// restricted to the cluster's neighborhood in the adjacent frames. Both
/// directions of both terms reuse fixed kd-trees: shifting the query by
/// -delta is equivalent to shifting the indexed set by +delta.
class ClusterObjective {
 public:
  ClusterObjective(const std::vector<Vec3>& cluster, const std::vector<Vec3>& init_flow,
                   const std::vector<Vec3>& next_dyn, const std::vector<Vec3>& prev_dyn,
                   const RefineParams& params)
      : cap_(params.truncation) {
    std::vector<Vec3> fwd_all, bwd_all;
    fwd_all.reserve(cluster.size());
    bwd_all.reserve(cluster.size());
    for (std::size_t i = 0; i < cluster.size(); ++i) {
      fwd_all.push_back(cluster[i] + init_flow[i]);
      bwd_all.push_back(cluster[i] - init_flow[i]);
    }
    fwd_ = stride_sample(fwd_all, params.max_cluster_samples);
    bwd_ = stride_sample(bwd_all, params.max_cluster_samples);

    auto nearby = [&](const std::vector<Vec3>& targets, const std::vector<Vec3>& anchor) {
      Vec3 center = Vec3::Zero();
      for (const auto& p : anchor) center += p;
      center /= static_cast<double>(anchor.size());
      double reach = 0.0;
      for (const auto& p : anchor) reach = std::max(reach, (p - center).norm());
      double limit = reach + params.neighborhood;
      std::vector<Vec3> out;
      for (const auto& q : targets)
        if ((q - center).norm() <= limit) out.push_back(q);
      return stride_sample(out, params.max_target_samples);
    };
    next_near_ = nearby(next_dyn, fwd_);
    prev_near_ = nearby(prev_dyn, bwd_);

    fwd_index_ = NNIndex(fwd_);
    bwd_index_ = NNIndex(bwd_);
    if (!next_near_.empty()) next_index_ = NNIndex(next_near_);
    if (!prev_near_.empty()) prev_index_ = NNIndex(prev_near_);
  }

  bool usable() const { return !next_near_.empty() && !prev_near_.empty(); }

  double operator()(const Vec3& delta) const {
    double obj = 0.0;
    obj += directed(fwd_, delta, next_index_);
    obj += directed(next_near_, -delta, fwd_index_);
    obj += directed(bwd_, -delta, prev_index_);
    obj += directed(prev_near_, delta, bwd_index_);
    return obj;
  }

 private:
  double directed(const std::vector<Vec3>& pts, const Vec3& shift,
                  const NNIndex& target) const {
    double sum = 0.0;
    for (const auto& p : pts) {
      NNResult nn = target.nearest_within(p + shift, cap_);
      sum += nn.index < 0 ? cap_ : nn.distance;
    }
    return sum / static_cast<double>(pts.size());
  }

  std::vector<Vec3> fwd_, bwd_, next_near_, prev_near_;
  NNIndex fwd_index_, bwd_index_, next_index_, prev_index_;
  double cap_;
};

}  // namespace detail

/// Per-cluster translation refinement of an initial flow field. For every
/// dynamic cluster a correction delta minimizing the symmetric truncated
/// Chamfer objective (forward to the next frame's dynamic points, backward
/// with negated flow to the previous frame's) is found by coarse grid search
/// followed by coordinate descent with strictly monotone acceptance; the
/// descent may walk beyond the grid box. Returns the initial flow with the
/// per-cluster corrections added.
inline FlowField refine_symmetric_chamfer(const Frame& prev, const Frame& cur,
                                          const Frame& next, const DynamicLabels& prev_labels,
                                          const DynamicLabels& cur_labels,
                                          const DynamicLabels& next_labels,
                                          const FlowField& init,
                                          const RefineParams& params = {},
                                          RefineReport* report = nullptr) {
  FlowField out = init;
  auto clusters = cur_labels.dynamic_clusters();
  if (clusters.empty()) return out;

  std::vector<Vec3> next_dyn, prev_dyn;
  for (std::size_t i = 0; i < next.size(); ++i)
    if (next_labels.dynamic[i]) next_dyn.push_back(next.points[i].position);
  for (std::size_t i = 0; i < prev.size(); ++i)
    if (prev_labels.dynamic[i]) prev_dyn.push_back(prev.points[i].position);
  if (next_dyn.empty() || prev_dyn.empty()) {
    warn("refinement skipped: no dynamic context in adjacent frames");
    return out;
  }

  std::vector<Vec3> deltas(clusters.size(), Vec3::Zero());
  std::vector<std::vector<double>> histories(clusters.size());

  parallel_for(clusters.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto& members = clusters[c];
      std::vector<Vec3> cluster_pts, cluster_flow;
      cluster_pts.reserve(members.size());
      cluster_flow.reserve(members.size());
      for (int i : members) {
        cluster_pts.push_back(cur.points[i].position);
        cluster_flow.push_back(init.valid[i] ? init.vectors[i] : Vec3::Zero());
      }
      detail::ClusterObjective objective(cluster_pts, cluster_flow, next_dyn, prev_dyn,
                                         params);
      if (!objective.usable()) continue;

      std::vector<double>& history = histories[c];
      Vec3 best_delta = Vec3::Zero();
      double best_obj = objective(best_delta);
      history.push_back(best_obj);

      // coarse grid
      int half_steps = static_cast<int>(std::lround(params.grid_half / params.grid_step));
      for (int zi = -half_steps; zi <= half_steps; ++zi)
        for (int yi = -half_steps; yi <= half_steps; ++yi)
          for (int xi = -half_steps; xi <= half_steps; ++xi) {
            if (xi == 0 && yi == 0 && zi == 0) continue;
            Vec3 delta(xi * params.grid_step, yi * params.grid_step,
                       zi * params.grid_step);
            double obj = objective(delta);
            if (obj < best_obj - params.min_decrease) {
              best_obj = obj;
              best_delta = delta;
              history.push_back(best_obj);
            }
          }

      // coordinate descent, halving steps down to the resolution limit
      int moves = 0;
      for (double step = params.grid_step; step >= params.descent_min_step; step *= 0.5) {
        bool improved = true;
        while (improved && moves < params.max_descent_moves) {
          improved = false;
          for (int axis = 0; axis < 3; ++axis) {
            for (double sign : {1.0, -1.0}) {
              Vec3 delta = best_delta;
              delta[axis] += sign * step;
              double obj = objective(delta);
              if (obj < best_obj - params.min_decrease) {
                best_obj = obj;
                best_delta = delta;
                history.push_back(best_obj);
                improved = true;
                ++moves;
              }
            }
          }
        }
      }
      deltas[c] = best_delta;
    }
  });

  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (int i : clusters[c]) {
      out.vectors[i] = (init.valid[i] ? init.vectors[i] : Vec3::Zero()) + deltas[c];
      out.valid[i] = 1;
    }
    if (report) report->objective_history.push_back(std::move(histories[c]));
  }
  return out;
}

}  // namespace himo
