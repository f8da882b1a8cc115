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
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "himo/common.hpp"
#include "himo/frame.hpp"

namespace himo {

struct FreeSpaceParams {
  double voxel = 0.2;  // meters
  // Mount offsets per sensor id, in the ego frame. Rays start at the ego
  // pose at the point's capture time plus this offset; without a rig the
  // offset defaults to the ego origin.
  std::vector<Vec3> sensor_offsets;
  double max_carve_range = 80.0;  // rays are truncated beyond this length
};

/// Open-addressing hash map from voxel key to flag byte. Voxel carving
/// touches tens of millions of cells per frame, which makes the node-based
/// standard containers the bottleneck; linear probing over a flat array is
/// several times faster.
class VoxelFlagMap {
 public:
  VoxelFlagMap() { rehash(1u << 12); }

  explicit VoxelFlagMap(std::size_t expected_cells) {
    std::size_t capacity = 1u << 12;
    while (capacity * 3 < expected_cells * 5) capacity *= 2;
    rehash(capacity);
  }

  void or_flags(std::int64_t key, std::uint8_t flags) {
    std::size_t i = slot(key);
    if (keys_[i] == kEmptySlot) {
      keys_[i] = key;
      vals_[i] = flags;
      if (++count_ * 5 > keys_.size() * 3) rehash(keys_.size() * 2);
    } else {
      vals_[i] |= flags;
    }
  }

  std::uint8_t flags(std::int64_t key) const {
    std::size_t i = slot(key);
    return keys_[i] == kEmptySlot ? 0 : vals_[i];
  }

  std::size_t size() const { return count_; }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < keys_.size(); ++i)
      if (keys_[i] != kEmptySlot) fn(keys_[i], vals_[i]);
  }

  void merge(const VoxelFlagMap& other) {
    other.for_each([this](std::int64_t k, std::uint8_t f) { or_flags(k, f); });
  }

 private:
  static constexpr std::int64_t kEmptySlot = -1;  // voxel keys are non-negative

  std::size_t slot(std::int64_t key) const {
    std::uint64_t h = static_cast<std::uint64_t>(key) * 0x9e3779b97f4a7c15ULL;
    std::size_t i = (h ^ (h >> 29)) & mask_;
    while (keys_[i] != kEmptySlot && keys_[i] != key) i = (i + 1) & mask_;
    return i;
  }

  void rehash(std::size_t capacity) {
    std::vector<std::int64_t> old_keys = std::move(keys_);
    std::vector<std::uint8_t> old_vals = std::move(vals_);
    keys_.assign(capacity, kEmptySlot);
    vals_.assign(capacity, 0);
    mask_ = capacity - 1;
    count_ = 0;
    for (std::size_t i = 0; i < old_keys.size(); ++i)
      if (old_keys[i] != kEmptySlot) or_flags(old_keys[i], old_vals[i]);
  }

  std::vector<std::int64_t> keys_;
  std::vector<std::uint8_t> vals_;
  std::size_t mask_ = 0;
  std::size_t count_ = 0;
};

/// Voxel occupancy evidence accumulated from one frame's rays. A voxel
/// traversed by any ray interior (terminal voxel excluded) carries the
/// seen-empty flag; a voxel holding a return carries seen-occupied. A voxel
/// counts as observed empty only when it was traversed and never occupied,
/// which keeps grazing rays along static surfaces from carving them.
struct FreeSpaceGrid {
  static constexpr std::uint8_t kSeenEmpty = 1;
  static constexpr std::uint8_t kSeenOccupied = 2;

  double voxel = 0.2;
  VoxelFlagMap cells;

  static std::int64_t key(int x, int y, int z) {
    auto m = [](int v) { return static_cast<std::int64_t>(v) & 0x1fffff; };  // 21 bits
    return (m(x) << 42) | (m(y) << 21) | m(z);
  }

  static std::int64_t key(const Vec3& p, double voxel) {
    return key(static_cast<int>(std::floor(p.x() / voxel)),
               static_cast<int>(std::floor(p.y() / voxel)),
               static_cast<int>(std::floor(p.z() / voxel)));
  }

  bool observed_empty(std::int64_t k) const {
    return cells.flags(k) == kSeenEmpty;
  }

  void merge(const FreeSpaceGrid& other) { cells.merge(other.cells); }
};

namespace detail {

/// Amanatides-Woo traversal from `origin` to `target`, invoking fn on every
/// voxel strictly before the terminal one (the voxel containing the target).
template <typename Fn>
void walk_ray(const Vec3& origin, const Vec3& target, double voxel, Fn&& fn) {
  Eigen::Array3i cur, last;
  for (int a = 0; a < 3; ++a) {
    cur[a] = static_cast<int>(std::floor(origin[a] / voxel));
    last[a] = static_cast<int>(std::floor(target[a] / voxel));
  }
  if ((cur == last).all()) return;
  Vec3 dir = target - origin;
  double len = dir.norm();
  if (len < 1e-12) return;

  Eigen::Array3i step;
  Eigen::Array3d t_max, t_delta;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 1e-15) {
      step[a] = 1;
      t_max[a] = ((cur[a] + 1) * voxel - origin[a]) / dir[a];
      t_delta[a] = voxel / dir[a];
    } else if (dir[a] < -1e-15) {
      step[a] = -1;
      t_max[a] = (cur[a] * voxel - origin[a]) / dir[a];
      t_delta[a] = -voxel / dir[a];
    } else {
      step[a] = 0;
      t_max[a] = t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }

  int guard = 4 * static_cast<int>(len / voxel) + 12;
  while (guard-- > 0) {
    fn(cur);
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    if (t_max[axis] > 1.0) break;  // next boundary is past the target
    cur[axis] += step[axis];
    if ((cur == last).all()) break;
    t_max[axis] += t_delta[axis];
  }
}

}  // namespace detail

/// Builds one frame's occupancy evidence: ray interiors mark seen-empty,
/// returns mark seen-occupied. The frame must be co-registered in the world
/// frame; ray origins follow the ego pose at each point's capture time.
inline FreeSpaceGrid carve_frame(const Frame& frame, const FreeSpaceParams& params = {}) {
  if (frame.ref != PointsRef::kWorld)
    throw std::invalid_argument("frames not co-registered");
  const double voxel = params.voxel;

  int n_threads = std::max(1, max_threads());
  std::vector<FreeSpaceGrid> partial(n_threads);
  std::atomic<int> slot{0};
  parallel_for(frame.size(), [&](std::size_t begin, std::size_t end) {
    FreeSpaceGrid local;
    local.voxel = voxel;
    for (std::size_t i = begin; i < end; ++i) {
      const TimedPoint& p = frame.points[i];
      RigidMotion ego = frame.ego_trajectory.at(p.t / frame.t_sensor);
      Vec3 offset = Vec3::Zero();
      if (p.sensor_id < params.sensor_offsets.size())
        offset = params.sensor_offsets[p.sensor_id];
      Vec3 origin = ego.apply(offset);
      Vec3 target = p.position;
      local.cells.or_flags(FreeSpaceGrid::key(target, voxel), FreeSpaceGrid::kSeenOccupied);
      Vec3 span = target - origin;
      double len = span.norm();
      if (len > params.max_carve_range)
        target = origin + span * (params.max_carve_range / len);
      detail::walk_ray(origin, target, voxel, [&](const Eigen::Array3i& c) {
        local.cells.or_flags(FreeSpaceGrid::key(c[0], c[1], c[2]), FreeSpaceGrid::kSeenEmpty);
      });
    }
    partial[slot.fetch_add(1) % n_threads] = std::move(local);
  });

  FreeSpaceGrid out;
  out.voxel = voxel;
  for (auto& grid : partial) out.merge(grid);
  return out;
}

/// Indices of target-frame points whose voxel was observed empty by any of
/// the given per-frame grids.
inline std::vector<int> seen_empty_points(const Frame& frame,
                                          std::span<const FreeSpaceGrid* const> grids,
                                          double voxel) {
  if (frame.ref != PointsRef::kWorld)
    throw std::invalid_argument("frames not co-registered");
  std::vector<int> out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    std::int64_t key = FreeSpaceGrid::key(frame.points[i].position, voxel);
    for (const FreeSpaceGrid* grid : grids) {
      if (grid->observed_empty(key)) {
        out.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  return out;
}

/// Free-space dynamic classifier: indices of target-frame points whose voxel
/// was observed empty by any other frame of the window. All frames must be
/// co-registered in a common world frame.
inline std::vector<int> dynamic_freespace(std::span<const Frame* const> window,
                                          std::size_t target,
                                          const FreeSpaceParams& params = {}) {
  if (window.size() < 2)
    throw std::invalid_argument("free-space window needs at least 2 frames");
  if (target >= window.size())
    throw std::invalid_argument("target index outside window");

  std::vector<FreeSpaceGrid> carved;
  for (std::size_t f = 0; f < window.size(); ++f) {
    if (f == target) continue;
    carved.push_back(carve_frame(*window[f], params));
  }
  std::vector<const FreeSpaceGrid*> ptrs;
  for (const auto& grid : carved) ptrs.push_back(&grid);
  return seen_empty_points(*window[target], ptrs, params.voxel);
}

}  // namespace himo
