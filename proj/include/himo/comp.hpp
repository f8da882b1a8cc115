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

#include <stdexcept>
#include <utility>
#include <vector>

#include "himo/frame.hpp"

namespace himo {

/// Per-point 3D displacement to the next frame, index-aligned with a Frame.
/// `valid` is false where the estimator abstained; invalid entries contribute
/// zero correction downstream. `horizon_seconds` is the time span the flow
/// covers (the inter-frame gap), normally equal to t_sensor; the correction
/// formula divides by it, and the value is recorded in run metadata.
struct FlowField {
  std::vector<Vec3> vectors;
  std::vector<std::uint8_t> valid;
  double horizon_seconds = 0.0;

  static FlowField zeros(std::size_t n, double horizon) {
    FlowField f;
    f.vectors.assign(n, Vec3::Zero());
    f.valid.assign(n, 1);
    f.horizon_seconds = horizon;
    return f;
  }

  std::size_t size() const { return vectors.size(); }
};

/// Per-point correction vectors that were applied to a frame.
struct DistortionField {
  std::vector<Vec3> vectors;

  std::size_t size() const { return vectors.size(); }
};

enum class CompensationTarget : std::uint8_t {
  kScanEnd,  // default, matches the correction formula's time reference
  kMidScan,  // conventional SLAM target, selectable but not scored
};

/// Time difference from the point's capture to the timestamp of the last
/// point in the frame. Lies in [0, t_sensor].
inline double delta_t(const TimedPoint& point, const Frame& frame) {
  return frame.max_time() - point.t;
}

/// Transforms every point from the ego pose at its capture time into the ego
/// frame at the target time (scan end by default). Removes static-world
/// distortion; dynamic-object distortion remains. Timestamps are preserved.
inline Frame ego_compensate(const Frame& frame,
                            CompensationTarget target = CompensationTarget::kScanEnd) {
  Frame out = frame;
  double target_u = target == CompensationTarget::kScanEnd ? 1.0 : 0.5;
  RigidMotion to_target = frame.ego_trajectory.at(target_u).inverse();
  for (auto& p : out.points) {
    RigidMotion at_capture = frame.ego_trajectory.at(p.t / frame.t_sensor);
    p.position = to_target.apply(at_capture.apply(p.position));
  }
  out.ref = PointsRef::kEgoTarget;
  return out;
}

/// Re-expresses an ego-compensated frame in the fixed world frame so that
/// consecutive frames are co-registered. Ground-truth vectors rotate with
/// the frame.
inline Frame place_in_world(const Frame& frame,
                            CompensationTarget target = CompensationTarget::kScanEnd) {
  if (frame.ref == PointsRef::kWorld) return frame;
  if (frame.ref != PointsRef::kEgoTarget)
    throw std::invalid_argument("place_in_world expects an ego-compensated frame");
  Frame out = frame;
  double target_u = target == CompensationTarget::kScanEnd ? 1.0 : 0.5;
  RigidMotion pose = frame.ego_trajectory.at(target_u);
  for (auto& p : out.points) p.position = pose.apply(p.position);
  if (out.gt) {
    for (auto& v : out.gt->correction) v = pose.rotation * v;
    for (auto& v : out.gt->flow) v = pose.rotation * v;
  }
  out.ref = PointsRef::kWorld;
  return out;
}

/// Inverse of place_in_world.
inline Frame place_in_ego(const Frame& frame,
                          CompensationTarget target = CompensationTarget::kScanEnd) {
  if (frame.ref != PointsRef::kWorld) return frame;
  Frame out = frame;
  double target_u = target == CompensationTarget::kScanEnd ? 1.0 : 0.5;
  RigidMotion pose = frame.ego_trajectory.at(target_u).inverse();
  for (auto& p : out.points) p.position = pose.apply(p.position);
  if (out.gt) {
    for (auto& v : out.gt->correction) v = pose.rotation * v;
    for (auto& v : out.gt->flow) v = pose.rotation * v;
  }
  out.ref = PointsRef::kEgoTarget;
  return out;
}

/// Non-ego motion compensation: per point, velocity = flow / horizon and
/// correction = velocity * delta_t(p). Output positions are input + correction;
/// timestamps are preserved and the applied corrections are returned.
inline std::pair<Frame, DistortionField> himo_compensate(const Frame& frame,
                                                         const FlowField& flow) {
  if (flow.size() != frame.size())
    throw std::invalid_argument("flow/frame mismatch");
  double horizon = flow.horizon_seconds > 0.0 ? flow.horizon_seconds : frame.t_sensor;
  double t_last = frame.max_time();
  Frame out = frame;
  DistortionField applied;
  applied.vectors.resize(frame.size(), Vec3::Zero());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (!flow.valid[i]) continue;
    Vec3 velocity = flow.vectors[i] / horizon;
    Vec3 correction = velocity * (t_last - frame.points[i].t);
    applied.vectors[i] = correction;
    out.points[i].position += correction;
  }
  return {std::move(out), std::move(applied)};
}

}  // namespace himo
