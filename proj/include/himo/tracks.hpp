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

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "himo/comp.hpp"
#include "himo/common.hpp"
#include "himo/frame.hpp"

namespace himo {

enum class Category : std::uint8_t { kCar, kOthers };

inline const char* to_string(Category c) {
  return c == Category::kCar ? "CAR" : "OTHERS";
}

/// Oriented bounding box with track id and velocity. Boxes are stamped at the
/// frame's scan-end time, so raw points trail the box against its motion.
struct TrackedBox {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Ones();  // full extents along the local axes
  double yaw = 0.0;
  Vec3 velocity = Vec3::Zero();
  int track_id = -1;
  Category category = Category::kCar;

  Mat3 rotation() const {
    return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  }

  bool contains(const Vec3& p) const {
    Vec3 local = rotation().transpose() * (p - center);
    return std::abs(local.x()) <= 0.5 * dims.x() &&
           std::abs(local.y()) <= 0.5 * dims.y() &&
           std::abs(local.z()) <= 0.5 * dims.z();
  }
};

/// Grows each box opposite its motion by |v| * t_sensor so that every
/// displaced copy of the object is contained, plus a fixed margin on all
/// sides. The swept extent distributes over the box axes by the velocity
/// direction, and the center shifts back by half the sweep, which keeps the
/// expansion trailing the motion.
inline std::vector<TrackedBox> expand_boxes(std::span<const TrackedBox> tracks,
                                            double t_sensor, double margin = 0.2) {
  std::vector<TrackedBox> out(tracks.begin(), tracks.end());
  for (auto& box : out) {
    double speed = box.velocity.norm();
    if (speed > 1e-12) {
      Vec3 dir = box.velocity / speed;
      double sweep = speed * t_sensor;
      Vec3 local_dir = box.rotation().transpose() * dir;
      box.dims += sweep * local_dir.cwiseAbs();
      box.center -= 0.5 * sweep * dir;
    }
    box.dims += Vec3::Constant(2.0 * margin);
  }
  return out;
}

/// Point-to-box membership over non-ground points. A point claimed by several
/// expanded boxes goes to the nearest box center; conflicts are counted.
struct BoxAssignment {
  std::vector<int> box_of_point;          // -1 where unclaimed
  std::vector<std::vector<int>> members;  // per box, ascending point indices
  int conflicts = 0;
};

inline BoxAssignment assign_to_boxes(const Frame& frame,
                                     std::span<const TrackedBox> expanded) {
  BoxAssignment out;
  out.box_of_point.assign(frame.size(), -1);
  out.members.resize(expanded.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.points[i].ground) continue;
    const Vec3& p = frame.points[i].position;
    int chosen = -1;
    double best_d2 = 0.0;
    int claims = 0;
    for (std::size_t b = 0; b < expanded.size(); ++b) {
      if (!expanded[b].contains(p)) continue;
      ++claims;
      double d2 = (p - expanded[b].center).squaredNorm();
      if (chosen < 0 || d2 < best_d2) {
        chosen = static_cast<int>(b);
        best_d2 = d2;
      }
    }
    if (claims > 1) ++out.conflicts;
    if (chosen >= 0) {
      out.box_of_point[i] = chosen;
      out.members[chosen].push_back(static_cast<int>(i));
    }
  }
  if (out.conflicts > 0)
    warn("box assignment: " + std::to_string(out.conflicts) +
         " points claimed by multiple expanded boxes, kept nearest center");
  return out;
}

/// Builds the undistorted reference frame from tracking annotations: every
/// point inside an expanded box moves by the box velocity times the point's
/// remaining scan time. Expects an ego-compensated frame and world-frame
/// velocities expressed in the frame's coordinates.
inline Frame make_gt(const Frame& frame, std::span<const TrackedBox> tracks,
                     double margin = 0.2) {
  std::vector<TrackedBox> expanded = expand_boxes(tracks, frame.t_sensor, margin);
  BoxAssignment assignment = assign_to_boxes(frame, expanded);
  double t_last = frame.max_time();
  Frame out = frame;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    int b = assignment.box_of_point[i];
    if (b < 0) continue;
    out.points[i].position += tracks[b].velocity * (t_last - frame.points[i].t);
  }
  return out;
}

}  // namespace himo
