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

#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "himo/autolabel.hpp"
#include "himo/comp.hpp"
#include "himo/flow_upper_bound.hpp"
#include "himo/nn_index.hpp"

namespace himo {

struct IcpParams {
  int max_iterations = 30;
  double translation_epsilon = 1e-3;    // convergence on the incremental shift
  double max_correspondence = 2.0;      // reject pairs farther than this
  bool full_se3 = false;                // default is translation + yaw
  double association_gate = 5.0;        // centroid gate for cluster matching
};

namespace detail {

/// Closed-form alignment of paired points: translation plus rotation about z
/// (ground vehicles), or full SE(3) via Kabsch when requested.
inline RigidMotion solve_alignment(std::span<const Vec3> src, std::span<const Vec3> dst,
                                   bool full_se3) {
  Vec3 src_mean = Vec3::Zero(), dst_mean = Vec3::Zero();
  for (const auto& p : src) src_mean += p;
  for (const auto& p : dst) dst_mean += p;
  src_mean /= static_cast<double>(src.size());
  dst_mean /= static_cast<double>(dst.size());

  RigidMotion out;
  if (full_se3) {
    Mat3 cov = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i)
      cov += (dst[i] - dst_mean) * (src[i] - src_mean).transpose();
    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    out.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  } else {
    double cross = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
      double sx = src[i].x() - src_mean.x(), sy = src[i].y() - src_mean.y();
      double dx = dst[i].x() - dst_mean.x(), dy = dst[i].y() - dst_mean.y();
      cross += sx * dy - sy * dx;
      dot += sx * dx + sy * dy;
    }
    double yaw = (cross == 0.0 && dot == 0.0) ? 0.0 : std::atan2(cross, dot);
    out = RigidMotion::from_yaw(yaw);
  }
  out.translation = dst_mean - out.rotation * src_mean;
  return out;
}

}  // namespace detail

struct IcpResult {
  RigidMotion transform;
  int iterations = 0;
  bool converged = false;
};

/// Point-to-point ICP of `source` onto the indexed target set.
inline IcpResult icp_point_to_point(std::span<const Vec3> source, const NNIndex& target,
                                    const RigidMotion& init, const IcpParams& params = {}) {
  IcpResult result;
  result.transform = init;
  std::vector<Vec3> moved(source.begin(), source.end());
  for (auto& p : moved) p = init.apply(p);

  std::vector<Vec3> src_pairs, dst_pairs;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    src_pairs.clear();
    dst_pairs.clear();
    for (const auto& p : moved) {
      NNResult nn = target.nearest_within(p, params.max_correspondence);
      if (nn.index < 0) continue;
      src_pairs.push_back(p);
      dst_pairs.push_back(target.point(nn.index));
    }
    result.iterations = iter + 1;
    if (src_pairs.size() < 3) break;
    RigidMotion delta = detail::solve_alignment(src_pairs, dst_pairs, params.full_se3);
    result.transform = delta * result.transform;
    for (auto& p : moved) p = delta.apply(p);
    if (delta.translation.norm() < params.translation_epsilon) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// Cluster-wise rigid flow: dynamic clusters of the current frame are
/// associated to the nearest dynamic cluster of the next frame (mutual
/// nearest centroids within a gate), aligned with ICP, and every member
/// point receives its rigid displacement. Unassociated clusters fall back
/// to the upper-bound flow; static points receive zero.
inline FlowField estimate_cluster_icp(const Frame& cur, const Frame& next,
                                      const DynamicLabels& cur_labels,
                                      const DynamicLabels& next_labels,
                                      const IcpParams& params = {}) {
  FlowField flow = FlowField::zeros(cur.size(), cur.t_sensor);
  auto cur_clusters = cur_labels.dynamic_clusters();
  if (cur_clusters.empty()) return flow;

  std::vector<Vec3> next_dyn;
  for (std::size_t i = 0; i < next.size(); ++i)
    if (next_labels.dynamic[i]) next_dyn.push_back(next.points[i].position);
  if (next_dyn.empty()) {
    warn("cluster ICP: no dynamic points in next frame, emitting zero flow");
    std::fill(flow.valid.begin(), flow.valid.end(), 0);
    return flow;
  }
  NNIndex next_dyn_index(next_dyn);
  auto next_clusters = next_labels.dynamic_clusters();

  auto centroid_of = [](const Frame& f, std::span<const int> members) {
    Vec3 c = Vec3::Zero();
    for (int i : members) c += f.points[i].position;
    return Vec3(c / static_cast<double>(members.size()));
  };
  auto dominant_sensor = [](const Frame& f, std::span<const int> members) {
    std::array<int, 256> votes{};
    for (int i : members) ++votes[f.points[i].sensor_id];
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  };
  std::vector<Vec3> cur_centroids, next_centroids;
  std::vector<int> cur_sensor, next_sensor;
  for (const auto& m : cur_clusters) {
    cur_centroids.push_back(centroid_of(cur, m));
    cur_sensor.push_back(dominant_sensor(cur, m));
  }
  for (const auto& m : next_clusters) {
    next_centroids.push_back(centroid_of(next, m));
    next_sensor.push_back(dominant_sensor(next, m));
  }

  // Mutual nearest centroids within the gate. A sensor sweep re-observes an
  // object one full revolution later, so same-sensor copies are displaced by
  // exactly one frame of motion while cross-sensor copies sit at fractional
  // offsets; pairing within the dominant sensor first keeps multi-LiDAR
  // copies from latching onto each other. Leftovers pair globally.
  const double gate2 = params.association_gate * params.association_gate;
  auto nearest_of = [&](const Vec3& p, const std::vector<Vec3>& pool,
                        const std::vector<int>& sensors, int want_sensor,
                        const std::vector<int>& taken) {
    int best = -1;
    double best_d2 = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (want_sensor >= 0 && sensors[i] != want_sensor) continue;
      if (taken[i] >= 0) continue;
      double d2 = (pool[i] - p).squaredNorm();
      if (d2 <= gate2 && (best < 0 || d2 < best_d2)) {
        best = static_cast<int>(i);
        best_d2 = d2;
      }
    }
    return best;
  };

  std::vector<int> match(cur_clusters.size(), -1);
  std::vector<int> taken(next_clusters.size(), -1);
  std::vector<int> cur_free(cur_clusters.size(), -1);
  for (int pass = 0; pass < 2; ++pass) {
    bool by_sensor = pass == 0;
    for (std::size_t c = 0; c < cur_clusters.size(); ++c) {
      if (match[c] >= 0) continue;
      int want = by_sensor ? cur_sensor[c] : -1;
      int fwd = nearest_of(cur_centroids[c], next_centroids, next_sensor, want, taken);
      if (fwd < 0) continue;
      int back = nearest_of(next_centroids[fwd], cur_centroids, cur_sensor,
                            by_sensor ? next_sensor[fwd] : -1, cur_free);
      if (back == static_cast<int>(c)) {
        match[c] = fwd;
        taken[fwd] = static_cast<int>(c);
        cur_free[c] = fwd;
      }
    }
  }

  for (std::size_t c = 0; c < cur_clusters.size(); ++c) {
    const auto& members = cur_clusters[c];
    if (match[c] < 0) {
      auto entry = detail::cluster_upper_bound(cur, members, next_dyn_index);
      for (int i : members) flow.vectors[i] = entry.flow;
      continue;
    }
    const auto& target_members = next_clusters[match[c]];
    std::vector<Vec3> src, dst;
    src.reserve(members.size());
    dst.reserve(target_members.size());
    for (int i : members) src.push_back(cur.points[i].position);
    for (int i : target_members) dst.push_back(next.points[i].position);
    NNIndex target_index(dst);

    RigidMotion init;
    init.translation = next_centroids[match[c]] - cur_centroids[c];
    IcpResult icp = icp_point_to_point(src, target_index, init, params);
    for (std::size_t m = 0; m < members.size(); ++m)
      flow.vectors[members[m]] = icp.transform.apply(src[m]) - src[m];
  }
  return flow;
}

}  // namespace himo
