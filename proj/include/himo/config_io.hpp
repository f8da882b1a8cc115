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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "himo/sim_scene.hpp"
#include "himo/tracks.hpp"

namespace himo::io {

using nlohmann::json;

inline json load_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  json j;
  is >> j;
  return j;
}

inline Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

// ---------------------------------------------------------------------------
// Scene documents
// ---------------------------------------------------------------------------
//
// {
//   "duration": 1.5, "ego_velocity": [2,0,0],
//   "ground": {"z": 0.0, "extent": 150.0},            // optional
//   "static_boxes": [{"center":[...], "dims":[...]}],  // optional
//   "objects": [{"track_id":1, "category":"CAR", "dims":[4.5,1.9,1.5],
//                "position":[0,12,1.1], "yaw_deg":90, "velocity":[0,5,0],
//                "yaw_rate_deg":0}]
// }

inline sim::SceneSpec parse_scene(const json& j) {
  sim::SceneSpec scene;
  scene.duration = j.at("duration").get<double>();
  scene.ego_velocity = vec3_from(j.at("ego_velocity"));
  scene.ground.enabled = j.contains("ground");
  if (scene.ground.enabled) {
    scene.ground.z = j["ground"].value("z", 0.0);
    scene.ground.extent = j["ground"].value("extent", 200.0);
  }
  for (const auto& b : j.value("static_boxes", json::array())) {
    sim::StaticBox box;
    box.center = vec3_from(b.at("center"));
    box.dims = vec3_from(b.at("dims"));
    scene.static_boxes.push_back(box);
  }
  std::vector<int> seen_ids;
  for (const auto& o : j.value("objects", json::array())) {
    sim::ObjectSpec obj;
    obj.dims = vec3_from(o.at("dims"));
    if ((obj.dims.array() <= 0.0).any())
      throw std::runtime_error("object dims must be strictly positive");
    obj.initial_pose = RigidMotion::from_yaw(o.value("yaw_deg", 0.0) * M_PI / 180.0,
                                             vec3_from(o.at("position")));
    obj.velocity = vec3_from(o.at("velocity"));
    obj.yaw_rate = o.value("yaw_rate_deg", 0.0) * M_PI / 180.0;
    obj.track_id = o.at("track_id").get<int>();
    obj.category = o.value("category", "CAR") == "OTHERS" ? Category::kOthers
                                                          : Category::kCar;
    for (int id : seen_ids)
      if (id == obj.track_id) throw std::runtime_error("duplicate track_id in scene");
    seen_ids.push_back(obj.track_id);
    scene.objects.push_back(obj);
  }
  return scene;
}

/// Scene from a preset name or a JSON file path.
inline sim::SceneSpec load_scene(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path))
    return parse_scene(load_json(name_or_path));
  return sim::scene_preset(name_or_path);
}

// ---------------------------------------------------------------------------
// Rig documents
// ---------------------------------------------------------------------------
//
// {
//   "f_sensor": 10.0, "noise_sigma": 0.0,
//   "sensors": [{"mount_translation":[0.8,0,2.4], "mount_yaw_deg":0,
//                "start_azimuth_deg":0, "spin":1, "azimuth_step_deg":0.2,
//                "max_range":120,
//                "channels_deg": [-16, ..] |
//                "channels": {"min_deg":-16, "max_deg":8, "count":32}}]
// }

inline sim::LidarRig parse_rig(const json& j) {
  sim::LidarRig rig;
  rig.f_sensor = j.value("f_sensor", 10.0);
  rig.noise_sigma = j.value("noise_sigma", 0.0);
  for (const auto& s : j.at("sensors")) {
    sim::SensorSpec sensor;
    sensor.mount = RigidMotion::from_yaw(s.value("mount_yaw_deg", 0.0) * M_PI / 180.0,
                                         vec3_from(s.at("mount_translation")));
    sensor.start_azimuth = s.value("start_azimuth_deg", 0.0) * M_PI / 180.0;
    sensor.spin_direction = s.value("spin", 1) >= 0 ? 1 : -1;
    sensor.azimuth_step = s.value("azimuth_step_deg", 0.2) * M_PI / 180.0;
    sensor.max_range = s.value("max_range", 120.0);
    if (s.contains("channels_deg")) {
      for (const auto& c : s["channels_deg"])
        sensor.channels.push_back(c.get<double>() * M_PI / 180.0);
    } else {
      const auto& c = s.at("channels");
      sensor.channels = sim::linspace_channels(c.at("min_deg").get<double>(),
                                               c.at("max_deg").get<double>(),
                                               c.at("count").get<int>());
    }
    rig.sensors.push_back(sensor);
  }
  return rig;
}

inline sim::LidarRig load_rig(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path))
    return parse_rig(load_json(name_or_path));
  return sim::rig_preset(name_or_path);
}

// ---------------------------------------------------------------------------
// Per-frame tracking boxes
// ---------------------------------------------------------------------------

inline json tracks_to_json(const std::vector<std::vector<TrackedBox>>& per_frame) {
  json frames = json::array();
  for (const auto& tracks : per_frame) {
    json arr = json::array();
    for (const auto& b : tracks) {
      arr.push_back({{"track_id", b.track_id},
                     {"category", to_string(b.category)},
                     {"center", {b.center.x(), b.center.y(), b.center.z()}},
                     {"dims", {b.dims.x(), b.dims.y(), b.dims.z()}},
                     {"yaw", b.yaw},
                     {"velocity", {b.velocity.x(), b.velocity.y(), b.velocity.z()}}});
    }
    frames.push_back(std::move(arr));
  }
  return json{{"frames", std::move(frames)}};
}

inline std::vector<std::vector<TrackedBox>> tracks_from_json(const json& j) {
  std::vector<std::vector<TrackedBox>> out;
  for (const auto& arr : j.at("frames")) {
    std::vector<TrackedBox> tracks;
    for (const auto& b : arr) {
      TrackedBox box;
      box.track_id = b.at("track_id").get<int>();
      box.category = b.value("category", "CAR") == "OTHERS" ? Category::kOthers
                                                            : Category::kCar;
      box.center = vec3_from(b.at("center"));
      box.dims = vec3_from(b.at("dims"));
      box.yaw = b.at("yaw").get<double>();
      box.velocity = vec3_from(b.at("velocity"));
      tracks.push_back(box);
    }
    out.push_back(std::move(tracks));
  }
  return out;
}

inline void save_json(const std::filesystem::path& path, const json& j) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace himo::io
