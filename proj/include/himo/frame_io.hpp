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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "himo/frame.hpp"

namespace himo::io {

static_assert(std::endian::native == std::endian::little,
              "frame files are little-endian; big-endian hosts are unsupported");

// Binary frame container:
//   magic "HIMO", version u16, point count u64, t_sensor f64,
//   ego trajectory (two poses: 3x3 rotation row-major + translation, f64 x12),
//   columnar x/y/z/t (f32), sensor_id (u8), ground (u8),
//   gt flag u8, then optionally correction xyz, flow xyz (f32 columns),
//   dynamic (u8), track_id (i32). Little-endian throughout.
inline constexpr std::uint16_t kFrameFormatVersion = 1;

namespace detail {

template <typename T>
void write_scalar(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_scalar(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("frame file truncated");
  return v;
}

template <typename T>
void write_column(std::ostream& os, const std::vector<T>& col) {
  os.write(reinterpret_cast<const char*>(col.data()),
           static_cast<std::streamsize>(col.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_column(std::istream& is, std::size_t n) {
  std::vector<T> col(n);
  is.read(reinterpret_cast<char*>(col.data()),
          static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) throw std::runtime_error("frame file truncated");
  return col;
}

inline void write_pose(std::ostream& os, const RigidMotion& pose) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) write_scalar<double>(os, pose.rotation(r, c));
  for (int i = 0; i < 3; ++i) write_scalar<double>(os, pose.translation[i]);
}

inline RigidMotion read_pose(std::istream& is) {
  RigidMotion pose;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = read_scalar<double>(is);
  for (int i = 0; i < 3; ++i) pose.translation[i] = read_scalar<double>(is);
  if (!pose.is_valid_rotation(1e-6))
    throw std::runtime_error("frame file carries an invalid rotation");
  return pose;
}

}  // namespace detail

inline void write_frame(std::ostream& os, const Frame& frame, bool include_gt = true) {
  os.write("HIMO", 4);
  detail::write_scalar<std::uint16_t>(os, kFrameFormatVersion);
  std::size_t n = frame.size();
  detail::write_scalar<std::uint64_t>(os, n);
  detail::write_scalar<double>(os, frame.t_sensor);
  detail::write_pose(os, frame.ego_trajectory.start);
  detail::write_pose(os, frame.ego_trajectory.end);

  std::vector<float> fx(n), fy(n), fz(n), ft(n);
  std::vector<std::uint8_t> sensor(n), ground(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TimedPoint& p = frame.points[i];
    fx[i] = static_cast<float>(p.position.x());
    fy[i] = static_cast<float>(p.position.y());
    fz[i] = static_cast<float>(p.position.z());
    ft[i] = static_cast<float>(p.t);
    sensor[i] = p.sensor_id;
    ground[i] = p.ground ? 1 : 0;
  }
  detail::write_column(os, fx);
  detail::write_column(os, fy);
  detail::write_column(os, fz);
  detail::write_column(os, ft);
  detail::write_column(os, sensor);
  detail::write_column(os, ground);

  bool with_gt = include_gt && frame.gt.has_value();
  detail::write_scalar<std::uint8_t>(os, with_gt ? 1 : 0);
  if (with_gt) {
    const GroundTruth& gt = *frame.gt;
    auto write_vec_column = [&](const std::vector<Vec3>& vs, int axis) {
      std::vector<float> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<float>(vs[i][axis]);
      detail::write_column(os, col);
    };
    for (int a = 0; a < 3; ++a) write_vec_column(gt.correction, a);
    for (int a = 0; a < 3; ++a) write_vec_column(gt.flow, a);
    detail::write_column(os, gt.dynamic);
    detail::write_column(os, gt.track_id);
  }
}

inline Frame read_frame(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HIMO", 4) != 0)
    throw std::runtime_error("not a frame file (bad magic)");
  auto version = detail::read_scalar<std::uint16_t>(is);
  if (version != kFrameFormatVersion)
    throw std::runtime_error("unsupported frame file version " + std::to_string(version));

  Frame frame;
  auto n = detail::read_scalar<std::uint64_t>(is);
  frame.t_sensor = detail::read_scalar<double>(is);
  frame.ego_trajectory.start = detail::read_pose(is);
  frame.ego_trajectory.end = detail::read_pose(is);

  auto fx = detail::read_column<float>(is, n);
  auto fy = detail::read_column<float>(is, n);
  auto fz = detail::read_column<float>(is, n);
  auto ft = detail::read_column<float>(is, n);
  auto sensor = detail::read_column<std::uint8_t>(is, n);
  auto ground = detail::read_column<std::uint8_t>(is, n);
  frame.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    TimedPoint& p = frame.points[i];
    p.position = Vec3(fx[i], fy[i], fz[i]);
    p.t = ft[i];
    p.sensor_id = sensor[i];
    p.ground = ground[i] != 0;
  }

  if (detail::read_scalar<std::uint8_t>(is) != 0) {
    GroundTruth gt;
    auto read_vec = [&](std::vector<Vec3>& vs) {
      auto cx = detail::read_column<float>(is, n);
      auto cy = detail::read_column<float>(is, n);
      auto cz = detail::read_column<float>(is, n);
      vs.resize(n);
      for (std::size_t i = 0; i < n; ++i) vs[i] = Vec3(cx[i], cy[i], cz[i]);
    };
    read_vec(gt.correction);
    read_vec(gt.flow);
    gt.dynamic = detail::read_column<std::uint8_t>(is, n);
    gt.track_id = detail::read_column<std::int32_t>(is, n);
    frame.gt = std::move(gt);
  }
  return frame;
}

/// Atomic write: temp file in the target directory, then rename.
inline void save_frame(const std::filesystem::path& path, const Frame& frame,
                       bool include_gt = true) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    write_frame(os, frame, include_gt);
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Frame load_frame(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  Frame frame = read_frame(is);
  // timestamps were stored in f32; clamp quantization spill at the borders
  double eps = frame.t_sensor * 1e-6;
  for (auto& p : frame.points) {
    if (p.t < 0.0 && p.t > -eps) p.t = 0.0;
    if (p.t > frame.t_sensor && p.t < frame.t_sensor + eps) p.t = frame.t_sensor;
  }
  validate_frame(frame);
  return frame;
}

}  // namespace himo::io
