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
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "himo/geometry.hpp"

namespace himo {

/// Per-point reference data attached by the synthetic scanner.
///
/// Vectors are expressed in the scan-end ego frame and apply to
/// ego-compensated positions: `correction` moves a point to where its surface
/// sits at scan end, `flow` is the surface displacement over one full scan
/// interval.
struct GroundTruth {
  std::vector<Vec3> correction;
  std::vector<Vec3> flow;
  std::vector<std::uint8_t> dynamic;
  std::vector<std::int32_t> track_id;  // -1 for static/background

  std::size_t size() const { return correction.size(); }
};

/// Declared frame of reference for Frame::points.
enum class PointsRef : std::uint8_t {
  kRawEgoCapture,  // ego frame at each point's capture time (raw sensor data)
  kEgoTarget,      // ego frame at the compensation target time
  kWorld,          // fixed world frame (co-registered across frames)
};

/// Ego poses (world frame) at scan start and scan end; motion in between is
/// interpolated at constant velocity.
struct EgoTrajectory {
  RigidMotion start;
  RigidMotion end;

  RigidMotion at(double u) const { return interpolate(start, end, u); }
};

/// One fused multi-LiDAR sweep.
struct Frame {
  std::vector<TimedPoint> points;
  double t_sensor = 0.1;  // scan duration, = 1 / f_sensor
  EgoTrajectory ego_trajectory;
  int frame_index = 0;
  std::optional<GroundTruth> gt;
  PointsRef ref = PointsRef::kRawEgoCapture;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Timestamp of the last captured point (the compensation reference time).
  double max_time() const {
    double m = 0.0;
    for (const auto& p : points) m = std::max(m, p.t);
    return m;
  }

  std::vector<Vec3> positions() const {
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.position);
    return out;
  }

  /// Indices of points that survived ground removal, in ascending order.
  std::vector<int> non_ground_indices() const {
    std::vector<int> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      if (!points[i].ground) out.push_back(static_cast<int>(i));
    return out;
  }
};

inline void validate_frame(const Frame& frame) {
  if (frame.t_sensor <= 0.0) throw std::invalid_argument("t_sensor must be positive");
  for (const auto& p : frame.points) {
    if (!p.position.allFinite()) throw std::invalid_argument("non-finite point position");
    if (p.t < 0.0 || p.t > frame.t_sensor + 1e-12)
      throw std::invalid_argument("point timestamp outside [0, t_sensor]");
  }
  if (frame.gt && frame.gt->size() != frame.size())
    throw std::invalid_argument("ground truth not aligned with points");
}

}  // namespace himo
