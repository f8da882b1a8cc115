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
#include <limits>
#include <optional>
#include <vector>

#include "himo/common.hpp"
#include "himo/comp.hpp"
#include "himo/frame.hpp"
#include "himo/sim_scene.hpp"

namespace himo::sim {

namespace detail {

/// Slab intersection of a ray with a centered box; returns the entry
/// parameter if the ray hits within (s_min, s_max].
inline std::optional<double> ray_box(const Vec3& origin, const Vec3& dir,
                                     const Vec3& half, double s_min, double s_max) {
  double t_near = s_min, t_far = s_max;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (std::abs(origin[a]) > half[a]) return std::nullopt;
      continue;
    }
    double inv = 1.0 / dir[a];
    double t0 = (-half[a] - origin[a]) * inv;
    double t1 = (half[a] - origin[a]) * inv;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  return t_near;
}

struct Hit {
  double s = std::numeric_limits<double>::infinity();
  int object = -1;  // index into scene.objects, -1 for static geometry
  bool ground = false;
};

inline Hit cast_ray(const SceneSpec& scene, const Vec3& origin, const Vec3& dir,
                    double time, double max_range) {
  constexpr double kMinRange = 1e-6;
  Hit hit;
  hit.s = max_range;
  bool found = false;

  if (scene.ground.enabled && dir.z() < -1e-12) {
    double s = (scene.ground.z - origin.z()) / dir.z();
    if (s > kMinRange && s < hit.s) {
      Vec3 p = origin + s * dir;
      if (std::abs(p.x()) <= scene.ground.extent &&
          std::abs(p.y()) <= scene.ground.extent) {
        hit.s = s;
        hit.object = -1;
        hit.ground = true;
        found = true;
      }
    }
  }
  for (const auto& box : scene.static_boxes) {
    auto s = ray_box(origin - box.center, dir, 0.5 * box.dims, kMinRange, hit.s);
    if (s && *s < hit.s) {
      hit.s = *s;
      hit.object = -1;
      hit.ground = false;
      found = true;
    }
  }
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& obj = scene.objects[i];
    Mat3 rot = obj.rotation_at(time);
    Vec3 center = obj.center_at(time);
    Vec3 local_origin = rot.transpose() * (origin - center);
    Vec3 local_dir = rot.transpose() * dir;
    auto s = ray_box(local_origin, local_dir, 0.5 * obj.dims, kMinRange, hit.s);
    if (s && *s < hit.s) {
      hit.s = *s;
      hit.object = static_cast<int>(i);
      hit.ground = false;
      found = true;
    }
  }
  if (!found) hit.s = std::numeric_limits<double>::infinity();
  return hit;
}

}  // namespace detail

/// Simulates `n_frames` consecutive sweeps of the rig through the scene.
///
/// Each sensor spins continuously; column j of a sweep is sampled at
/// t = (j / n_columns) * t_sensor with azimuth advancing by the same
/// fraction of a turn. The wrap column is sampled at both sweep boundaries
/// (t = 0 and t = t_sensor), which is where an object sitting at the scan
/// seam gets split into two copies. Points are stored in the ego frame at
/// their capture time (raw, uncompensated), and exact per-point ground truth
/// is attached: correction to the scan-end surface, displacement over one
/// full scan interval, dynamic flag and track id.
inline std::vector<Frame> scan(const SceneSpec& scene, const LidarRig& rig,
                               int n_frames, std::uint64_t seed = 0) {
  if (rig.sensors.empty()) throw std::invalid_argument("degenerate rig");
  for (const auto& s : rig.sensors)
    if (s.channels.empty() || s.azimuth_step <= 0.0)
      throw std::invalid_argument("degenerate rig");
  if (n_frames < 2)
    throw std::invalid_argument("need at least 2 frames for flow estimation");
  double t_sensor = rig.t_sensor();
  if (scene.duration + 1e-9 < n_frames * t_sensor)
    throw std::invalid_argument("scene duration shorter than the requested scan");

  std::vector<Frame> frames;
  frames.reserve(n_frames);

  struct ColumnPoints {
    std::vector<TimedPoint> points;
    std::vector<Vec3> correction, flow;
    std::vector<std::uint8_t> dynamic;
    std::vector<std::int32_t> track;
  };

  for (int k = 0; k < n_frames; ++k) {
    Frame frame;
    frame.t_sensor = t_sensor;
    frame.frame_index = k;
    frame.ego_trajectory.start = scene.ego_pose_at(k * t_sensor);
    frame.ego_trajectory.end = scene.ego_pose_at((k + 1) * t_sensor);
    frame.gt.emplace();
    Mat3 ego_end_rot_t = frame.ego_trajectory.end.rotation.transpose();

    for (std::size_t si = 0; si < rig.sensors.size(); ++si) {
      const SensorSpec& sensor = rig.sensors[si];
      int n_cols = static_cast<int>(std::lround(2.0 * M_PI / sensor.azimuth_step));
      std::vector<ColumnPoints> columns(n_cols + 1);

      parallel_for(n_cols + 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          ColumnPoints& col = columns[j];
          double fraction = static_cast<double>(j) / n_cols;
          double t = fraction * t_sensor;
          double time = k * t_sensor + t;
          double azimuth =
              sensor.start_azimuth + sensor.spin_direction * 2.0 * M_PI * fraction;
          RigidMotion ego = scene.ego_pose_at(time);
          RigidMotion world = ego * sensor.mount;
          Rng noise(hash_combine(hash_combine(hash_combine(seed, k),
                                              static_cast<std::uint64_t>(si)),
                                 static_cast<std::uint64_t>(j)));
          for (double elevation : sensor.channels) {
            Vec3 dir_sensor(std::cos(elevation) * std::cos(azimuth),
                            std::cos(elevation) * std::sin(azimuth),
                            std::sin(elevation));
            Vec3 dir = world.rotation * dir_sensor;
            detail::Hit hit =
                detail::cast_ray(scene, world.translation, dir, time, sensor.max_range);
            if (!std::isfinite(hit.s)) continue;
            Vec3 p_world = world.translation + hit.s * dir;
            Vec3 p_clean = p_world;
            if (rig.noise_sigma > 0.0) {
              p_world += rig.noise_sigma *
                         Vec3(noise.normal(), noise.normal(), noise.normal());
            }
            TimedPoint point;
            point.position = ego.inverse().apply(p_world);
            point.t = t;
            point.sensor_id = static_cast<std::uint8_t>(si);
            col.points.push_back(point);

            if (hit.object >= 0) {
              const ObjectSpec& obj = scene.objects[hit.object];
              Vec3 local = obj.rotation_at(time).transpose() * (p_clean - obj.center_at(time));
              double end_time = (k + 1) * t_sensor;
              Vec3 at_end = obj.center_at(end_time) + obj.rotation_at(end_time) * local;
              Vec3 next_rev = obj.center_at(time + t_sensor) +
                              obj.rotation_at(time + t_sensor) * local;
              col.correction.push_back(ego_end_rot_t * (at_end - p_clean));
              col.flow.push_back(ego_end_rot_t * (next_rev - p_clean));
              col.dynamic.push_back(1);
              col.track.push_back(obj.track_id);
            } else {
              col.correction.push_back(Vec3::Zero());
              col.flow.push_back(Vec3::Zero());
              col.dynamic.push_back(0);
              col.track.push_back(-1);
            }
          }
        }
      });

      for (auto& col : columns) {
        frame.points.insert(frame.points.end(), col.points.begin(), col.points.end());
        auto& gt = *frame.gt;
        gt.correction.insert(gt.correction.end(), col.correction.begin(), col.correction.end());
        gt.flow.insert(gt.flow.end(), col.flow.begin(), col.flow.end());
        gt.dynamic.insert(gt.dynamic.end(), col.dynamic.begin(), col.dynamic.end());
        gt.track_id.insert(gt.track_id.end(), col.track.begin(), col.track.end());
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

/// Exposes the exact per-point ground-truth flow as an estimator result,
/// the upper-bound reference in evaluation.
inline FlowField oracle_flow(const Frame& frame) {
  if (!frame.gt) throw std::runtime_error("no ground truth");
  FlowField flow;
  flow.vectors = frame.gt->flow;
  flow.valid.assign(frame.size(), 1);
  flow.horizon_seconds = frame.t_sensor;
  return flow;
}

}  // namespace himo::sim
