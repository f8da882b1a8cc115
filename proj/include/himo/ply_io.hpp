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

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "himo/frame.hpp"

namespace himo::io {

enum class PlyColorMode : std::uint8_t { kSensor, kDynamic };
enum class PlyFormat : std::uint8_t { kAscii, kBinary };

namespace detail {

inline std::array<std::uint8_t, 3> sensor_color(std::uint8_t sensor_id) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 6> palette = {{
      {230, 80, 60},
      {60, 130, 230},
      {60, 190, 110},
      {235, 180, 50},
      {170, 90, 220},
      {90, 200, 210},
  }};
  return palette[sensor_id % palette.size()];
}

}  // namespace detail

/// Writes the frame as a standard PLY point cloud (properties x y z as
/// float, red green blue as uchar). Color encodes the source sensor or the
/// ground-truth dynamic flag when present (dynamic red, static gray).
inline void export_ply(const Frame& frame, const std::filesystem::path& path,
                       PlyColorMode mode = PlyColorMode::kSensor,
                       PlyFormat format = PlyFormat::kBinary) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");

  os << "ply\n";
  os << (format == PlyFormat::kAscii ? "format ascii 1.0\n"
                                     : "format binary_little_endian 1.0\n");
  os << "element vertex " << frame.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  os << "end_header\n";

  for (std::size_t i = 0; i < frame.size(); ++i) {
    const TimedPoint& p = frame.points[i];
    std::array<std::uint8_t, 3> rgb;
    if (mode == PlyColorMode::kSensor) {
      rgb = detail::sensor_color(p.sensor_id);
    } else {
      bool dynamic = frame.gt && i < frame.gt->dynamic.size() && frame.gt->dynamic[i];
      rgb = dynamic ? std::array<std::uint8_t, 3>{220, 40, 40}
                    : std::array<std::uint8_t, 3>{150, 150, 150};
    }
    float x = static_cast<float>(p.position.x());
    float y = static_cast<float>(p.position.y());
    float z = static_cast<float>(p.position.z());
    if (format == PlyFormat::kAscii) {
      os << x << " " << y << " " << z << " " << int(rgb[0]) << " " << int(rgb[1])
         << " " << int(rgb[2]) << "\n";
    } else {
      os.write(reinterpret_cast<const char*>(&x), 4);
      os.write(reinterpret_cast<const char*>(&y), 4);
      os.write(reinterpret_cast<const char*>(&z), 4);
      os.write(reinterpret_cast<const char*>(rgb.data()), 3);
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace himo::io
