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
#include <string>
#include <vector>

#include "himo/geometry.hpp"
#include "himo/tracks.hpp"

namespace himo::sim {

/// One rigid box moving at constant linear velocity with an optional
/// constant yaw rate.
struct ObjectSpec {
  Vec3 dims = Vec3::Ones();       // full extents in the box frame
  RigidMotion initial_pose;       // box frame at scene time 0
  Vec3 velocity = Vec3::Zero();   // m/s, world frame
  double yaw_rate = 0.0;          // rad/s about the box center
  int track_id = 0;
  Category category = Category::kCar;

  Mat3 rotation_at(double time) const {
    if (yaw_rate == 0.0) return initial_pose.rotation;
    return Eigen::AngleAxisd(yaw_rate * time, Vec3::UnitZ()).toRotationMatrix() *
           initial_pose.rotation;
  }

  Vec3 center_at(double time) const {
    return initial_pose.translation + velocity * time;
  }

  double yaw_at(double time) const {
    Mat3 r = rotation_at(time);
    return std::atan2(r(1, 0), r(0, 0));
  }
};

/// Axis-aligned static box.
struct StaticBox {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Ones();
};

struct GroundPlaneSpec {
  bool enabled = true;
  double z = 0.0;
  double extent = 200.0;  // half side of the square footprint
};

struct SceneSpec {
  std::vector<ObjectSpec> objects;
  std::vector<StaticBox> static_boxes;
  GroundPlaneSpec ground;
  double duration = 1.0;   // seconds
  Vec3 ego_velocity = Vec3::Zero();

  RigidMotion ego_pose_at(double time) const {
    RigidMotion pose;
    pose.translation = ego_velocity * time;
    return pose;
  }
};

struct SensorSpec {
  RigidMotion mount;              // pose relative to the ego frame
  double start_azimuth = 0.0;     // radians
  int spin_direction = 1;         // +-1
  std::vector<double> channels;   // elevation angles, radians
  double azimuth_step = 0.2 * M_PI / 180.0;
  double max_range = 120.0;
};

struct LidarRig {
  std::vector<SensorSpec> sensors;
  double f_sensor = 10.0;  // Hz, shared sweep frequency
  double noise_sigma = 0.0;

  double t_sensor() const { return 1.0 / f_sensor; }
};

inline std::vector<double> linspace_channels(double lo_deg, double hi_deg, int count) {
  std::vector<double> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    double a = count > 1 ? lo_deg + (hi_deg - lo_deg) * i / (count - 1) : lo_deg;
    out.push_back(a * M_PI / 180.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// One roof sensor, 32 channels.
inline LidarRig single_top_rig() {
  LidarRig rig;
  SensorSpec s;
  s.mount.translation = Vec3(0.0, 0.0, 2.0);
  s.channels = linspace_channels(-16.0, 8.0, 32);
  rig.sensors.push_back(s);
  return rig;
}

/// Two sensors with opposing sweep phases; the configuration that duplicates
/// fast objects.
inline LidarRig dual_180_rig() {
  LidarRig rig;
  SensorSpec s0;
  s0.mount.translation = Vec3(0.8, 0.0, 2.4);
  s0.start_azimuth = 0.0;
  s0.channels = linspace_channels(-16.0, 8.0, 32);
  SensorSpec s1 = s0;
  s1.mount.translation = Vec3(-0.8, 0.0, 2.4);
  s1.start_azimuth = M_PI;
  rig.sensors = {s0, s1};
  return rig;
}

inline LidarRig rig_preset(const std::string& name) {
  if (name == "single-top") return single_top_rig();
  if (name == "dual-180") return dual_180_rig();
  throw std::invalid_argument("unknown rig preset: " + name);
}

/// Reference scenario: four vehicles at 5/15/25/35 m/s receding along the
/// ego's lateral axis, split fore and aft so long vehicles never occlude
/// each other, plus a few static structures and flat ground. Bodies keep
/// ground clearance above the ground-segmentation tolerance. Targets on the
/// lateral axis of the symmetric dual rig are swept at mirrored phases, so
/// the mean per-object distortion depends on speed alone.
inline SceneSpec standard_scene() {
  SceneSpec scene;
  scene.duration = 1.5;
  scene.ego_velocity = Vec3(0.0, 1.5, 0.0);
  scene.ground = {true, 0.0, 150.0};
  scene.static_boxes = {
      {Vec3(20.0, -15.0, 2.0), Vec3(1.5, 1.5, 4.0)},
      {Vec3(-15.0, -25.0, 2.5), Vec3(2.0, 2.0, 5.0)},
      {Vec3(-25.0, 10.0, 2.0), Vec3(1.0, 8.0, 4.0)},
  };

  auto vehicle = [](int id, Category cat, const Vec3& dims, const Vec3& center,
                    double vy) {
    ObjectSpec obj;
    obj.dims = dims;
    obj.initial_pose = RigidMotion::from_yaw(vy >= 0 ? M_PI / 2.0 : -M_PI / 2.0, center);
    obj.velocity = Vec3(0.0, vy, 0.0);
    obj.track_id = id;
    obj.category = cat;
    return obj;
  };
  // bodies taller than the sensor plane: a roof below it is swept into a
  // sparse floating arc whose tangential motion defeats the NN classifier
  scene.objects = {
      vehicle(1, Category::kCar, Vec3(4.6, 1.9, 2.05), Vec3(0.0, 12.0, 1.375), 5.0),
      vehicle(2, Category::kCar, Vec3(4.6, 1.9, 2.05), Vec3(0.0, -12.0, 1.375), -15.0),
      vehicle(3, Category::kOthers, Vec3(8.0, 2.5, 2.7), Vec3(0.0, 38.0, 1.70), 25.0),
      vehicle(4, Category::kOthers, Vec3(10.0, 2.6, 3.0), Vec3(0.0, -38.0, 1.85), -35.0),
  };
  return scene;
}

inline SceneSpec scene_preset(const std::string& name) {
  if (name == "standard") return standard_scene();
  throw std::invalid_argument("unknown scene preset: " + name);
}

/// Scan-end tracking boxes for one frame, used for ground-truth generation
/// and metric clustering.
inline std::vector<TrackedBox> tracks_at(const SceneSpec& scene, int frame_index,
                                         double t_sensor) {
  double end_time = (frame_index + 1) * t_sensor;
  std::vector<TrackedBox> out;
  out.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    TrackedBox box;
    box.center = obj.center_at(end_time);
    box.dims = obj.dims;
    box.yaw = obj.yaw_at(end_time);
    box.velocity = obj.velocity;
    box.track_id = obj.track_id;
    box.category = obj.category;
    out.push_back(box);
  }
  return out;
}

}  // namespace himo::sim
