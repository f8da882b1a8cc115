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
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "himo/chamfer.hpp"
#include "himo/tracks.hpp"

namespace himo {

/// Cluster-weighted Chamfer distance between compensated and reference
/// positions. The literal normalization divides the size-weighted sum by the
/// cluster count; the weighted-mean alternative drops that prefactor. Which
/// one was used is recorded alongside every score.
///
/// `members` lists, per ground-truth cluster, the indices of its points;
/// `est` and `ref` are index-aligned position arrays of the same raw points
/// under the two corrections.
inline double cde(std::span<const Vec3> est, std::span<const Vec3> ref,
                  std::span<const std::vector<int>> members, bool literal = true) {
  if (est.size() != ref.size()) throw std::invalid_argument("point correspondence broken");
  std::size_t total_points = 0;
  std::size_t n_clusters = 0;
  for (const auto& m : members) {
    total_points += m.size();
    if (!m.empty()) ++n_clusters;
  }
  if (n_clusters == 0) throw std::invalid_argument("nothing to evaluate");

  double weighted = 0.0;
  for (const auto& m : members) {
    if (m.empty()) continue;
    std::vector<Vec3> a, b;
    a.reserve(m.size());
    b.reserve(m.size());
    for (int i : m) {
      a.push_back(est[i]);
      b.push_back(ref[i]);
    }
    double weight = static_cast<double>(m.size()) / static_cast<double>(total_points);
    weighted += weight * chamfer(a, b);
  }
  return literal ? weighted / static_cast<double>(n_clusters) : weighted;
}

/// Mean point error between compensated and reference positions of the
/// cluster points. The literal normalization divides the error sum by
/// cluster count times point count; the weighted-mean alternative divides by
/// the point count alone.
inline double mpe(std::span<const Vec3> est, std::span<const Vec3> ref,
                  std::span<const std::vector<int>> members, bool literal = true) {
  if (est.size() != ref.size()) throw std::invalid_argument("point correspondence broken");
  std::size_t total_points = 0;
  std::size_t n_clusters = 0;
  double sum = 0.0;
  for (const auto& m : members) {
    if (m.empty()) continue;
    ++n_clusters;
    total_points += m.size();
    for (int i : m) sum += (est[i] - ref[i]).norm();
  }
  if (n_clusters == 0) throw std::invalid_argument("nothing to evaluate");
  double denom = static_cast<double>(total_points);
  if (literal) denom *= static_cast<double>(n_clusters);
  return sum / denom;
}

struct VelocityBinRow {
  int bin = 0;  // [bin*width, (bin+1)*width)
  double speed_lo = 0.0, speed_hi = 0.0;
  double cde = 0.0, mpe = 0.0;
  int clusters = 0;
  std::size_t points = 0;
};

struct MetricsResult {
  double cde_total = 0.0, cde_car = 0.0, cde_others = 0.0;
  double mpe_total = 0.0, mpe_car = 0.0, mpe_others = 0.0;
  int clusters_car = 0, clusters_others = 0;
  std::size_t points_total = 0;
  std::vector<VelocityBinRow> bins;
  bool literal_normalization = true;
};

namespace detail {

inline double safe_cde(std::span<const Vec3> est, std::span<const Vec3> ref,
                       std::span<const std::vector<int>> members, bool literal) {
  for (const auto& m : members)
    if (!m.empty()) return cde(est, ref, members, literal);
  return 0.0;
}

inline double safe_mpe(std::span<const Vec3> est, std::span<const Vec3> ref,
                       std::span<const std::vector<int>> members, bool literal) {
  for (const auto& m : members)
    if (!m.empty()) return mpe(est, ref, members, literal);
  return 0.0;
}

}  // namespace detail

/// Full metric set for one frame: totals, CAR/OTHERS splits and
/// velocity-binned rows. Cluster membership comes from the expanded
/// ground-truth boxes, so scores are independent of auto-labeling quality.
inline MetricsResult evaluate_frame(std::span<const Vec3> est, std::span<const Vec3> ref,
                                    std::span<const TrackedBox> tracks,
                                    std::span<const std::vector<int>> members,
                                    bool literal = true, double bin_width = 10.0) {
  if (tracks.size() != members.size())
    throw std::invalid_argument("tracks/membership mismatch");
  MetricsResult out;
  out.literal_normalization = literal;
  out.cde_total = cde(est, ref, members, literal);
  out.mpe_total = mpe(est, ref, members, literal);

  std::vector<std::vector<int>> car, others;
  for (std::size_t b = 0; b < tracks.size(); ++b) {
    if (members[b].empty()) continue;
    out.points_total += members[b].size();
    if (tracks[b].category == Category::kCar) {
      car.push_back(members[b]);
      ++out.clusters_car;
    } else {
      others.push_back(members[b]);
      ++out.clusters_others;
    }
  }
  if (!car.empty()) {
    out.cde_car = detail::safe_cde(est, ref, car, literal);
    out.mpe_car = detail::safe_mpe(est, ref, car, literal);
  }
  if (!others.empty()) {
    out.cde_others = detail::safe_cde(est, ref, others, literal);
    out.mpe_others = detail::safe_mpe(est, ref, others, literal);
  }

  std::map<int, std::vector<std::vector<int>>> by_bin;
  for (std::size_t b = 0; b < tracks.size(); ++b) {
    if (members[b].empty()) continue;
    int bin = static_cast<int>(std::floor(tracks[b].velocity.norm() / bin_width));
    by_bin[bin].push_back(members[b]);
  }
  for (const auto& [bin, bin_members] : by_bin) {
    VelocityBinRow row;
    row.bin = bin;
    row.speed_lo = bin * bin_width;
    row.speed_hi = (bin + 1) * bin_width;
    row.cde = detail::safe_cde(est, ref, bin_members, literal);
    row.mpe = detail::safe_mpe(est, ref, bin_members, literal);
    row.clusters = static_cast<int>(bin_members.size());
    for (const auto& m : bin_members) row.points += m.size();
    out.bins.push_back(row);
  }
  return out;
}

}  // namespace himo
