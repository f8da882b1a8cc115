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

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "himo/common.hpp"
#include "himo/frame.hpp"

namespace himo {

struct GroundRemovalParams {
  double tolerance = 0.2;        // inlier distance to the fitted plane, meters
  double max_candidate_z = 0.5;  // only points at or below this z seed the fit
  double max_slope_deg = 25.0;   // reject planes tilted further from horizontal
  int iterations = 100;
  std::uint64_t seed = 12345;
};

namespace detail {

struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;  // normal . p + offset = 0

  double distance(const Vec3& p) const { return std::abs(normal.dot(p) + offset); }
};

inline Plane fit_plane_lsq(const std::vector<Vec3>& pts, const std::vector<int>& idx) {
  Vec3 centroid = Vec3::Zero();
  for (int i : idx) centroid += pts[i];
  centroid /= static_cast<double>(idx.size());
  Mat3 cov = Mat3::Zero();
  for (int i : idx) {
    Vec3 d = pts[i] - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  Plane plane;
  plane.normal = solver.eigenvectors().col(0);  // smallest eigenvalue
  if (plane.normal.z() < 0.0) plane.normal = -plane.normal;
  plane.offset = -plane.normal.dot(centroid);
  return plane;
}

}  // namespace detail

/// Single-plane RANSAC ground segmentation. Flags points within `tolerance`
/// of the fitted plane as ground; no points are deleted. With fewer than
/// three candidate seed points a warning is emitted and no flags are set.
inline Frame remove_ground(const Frame& frame, const GroundRemovalParams& params = {}) {
  Frame out = frame;
  for (auto& p : out.points) p.ground = false;
  if (frame.empty()) return out;

  std::vector<Vec3> pos = frame.positions();
  std::vector<int> candidates;
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (pos[i].z() <= params.max_candidate_z) candidates.push_back(static_cast<int>(i));

  if (candidates.size() < 3) {
    warn("ground removal: fewer than 3 candidate ground points, no flags set");
    return out;
  }

  const double cos_max_slope = std::cos(params.max_slope_deg * M_PI / 180.0);
  Rng rng(params.seed);
  detail::Plane best;
  int best_inliers = -1;
  for (int iter = 0; iter < params.iterations; ++iter) {
    int a = candidates[rng.below(candidates.size())];
    int b = candidates[rng.below(candidates.size())];
    int c = candidates[rng.below(candidates.size())];
    if (a == b || b == c || a == c) continue;
    Vec3 n = (pos[b] - pos[a]).cross(pos[c] - pos[a]);
    double len = n.norm();
    if (len < 1e-12) continue;
    n /= len;
    if (n.z() < 0.0) n = -n;
    if (n.z() < cos_max_slope) continue;
    double offset = -n.dot(pos[a]);
    int inliers = 0;
    for (int i : candidates)
      if (std::abs(n.dot(pos[i]) + offset) <= params.tolerance) ++inliers;
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best = {n, offset};
    }
  }
  if (best_inliers < 3) {
    warn("ground removal: no acceptable plane found, no flags set");
    return out;
  }

  // two rounds of least-squares refinement on the inlier set
  for (int round = 0; round < 2; ++round) {
    std::vector<int> inliers;
    for (int i : candidates)
      if (best.distance(pos[i]) <= params.tolerance) inliers.push_back(i);
    if (inliers.size() < 3) break;
    detail::Plane refined = detail::fit_plane_lsq(pos, inliers);
    if (refined.normal.z() < cos_max_slope) break;
    best = refined;
  }

  for (std::size_t i = 0; i < pos.size(); ++i)
    if (best.distance(pos[i]) <= params.tolerance) out.points[i].ground = true;
  return out;
}

}  // namespace himo
