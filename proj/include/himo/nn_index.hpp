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
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "himo/geometry.hpp"

namespace himo {

struct NNResult {
  double distance = std::numeric_limits<double>::infinity();
  int index = -1;
};

/// Immutable kd-tree over a fixed set of 3D positions with exact
/// nearest-neighbor queries. Distances are computed with the same expression
/// a brute-force scan would use, and equal distances resolve to the lowest
/// point index, so results match an O(n) scan bit for bit. Safe for
/// concurrent queries once built.
class NNIndex {
 public:
  NNIndex() = default;

  explicit NNIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!points_.empty()) {
      nodes_.reserve(points_.size() / kLeafSize * 2 + 2);
      root_ = build(0, static_cast<int>(points_.size()));
    }
  }

  explicit NNIndex(std::span<const Vec3> points)
      : NNIndex(std::vector<Vec3>(points.begin(), points.end())) {}

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(int i) const { return points_[i]; }

  /// Exact nearest neighbor; ties broken by lowest index.
  NNResult nearest(const Vec3& query) const {
    if (points_.empty()) throw std::invalid_argument("empty point set");
    Best best;
    search(root_, query, best);
    return {std::sqrt(best.d2), best.index};
  }

  /// Nearest neighbor, but the search may stop early once it can prove no
  /// point lies within `max_distance`; in that case index is -1 and distance
  /// is +inf. Used by truncated objectives where far matches are capped.
  NNResult nearest_within(const Vec3& query, double max_distance) const {
    if (points_.empty()) throw std::invalid_argument("empty point set");
    Best best;
    best.d2 = max_distance * max_distance;
    best.bound_only = true;
    search(root_, query, best);
    if (best.index < 0) return {};
    return {std::sqrt(best.d2), best.index};
  }

  /// All indices with distance <= radius, ascending.
  void radius_search(const Vec3& query, double radius, std::vector<int>& out) const {
    out.clear();
    if (points_.empty()) return;
    radius_collect(root_, query, radius * radius, out);
    std::sort(out.begin(), out.end());
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };

  struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    int index = -1;
    bool bound_only = false;  // d2 starts as a cap, not as a found point
  };

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin > kLeafSize) {
      Vec3 lo = points_[order_[begin]], hi = lo;
      for (int i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
      }
      int axis;
      (hi - lo).maxCoeff(&axis);
      if (hi[axis] > lo[axis]) {
        int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid,
                         order_.begin() + end, [&](int a, int b) {
                           return points_[a][axis] < points_[b][axis];
                         });
        node.axis = axis;
        node.split = points_[order_[mid]][axis];
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        int left = build(begin, mid);
        int right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
      }
      // all points coincide along every axis with spread: keep as a leaf
    }
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    return id;
  }

  void search(int id, const Vec3& query, Best& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        int idx = order_[i];
        double d2 = (query - points_[idx]).squaredNorm();
        if (best.bound_only) {
          if (d2 <= best.d2) {
            best.d2 = d2;
            best.index = idx;
            best.bound_only = false;
          }
        } else if (d2 < best.d2 || (d2 == best.d2 && idx < best.index)) {
          best.d2 = d2;
          best.index = idx;
        }
      }
      return;
    }
    double diff = query[node.axis] - node.split;
    int near = diff < 0.0 ? node.left : node.right;
    int far = diff < 0.0 ? node.right : node.left;
    search(near, query, best);
    // <= keeps equal-distance candidates reachable so the lowest index wins
    if (diff * diff <= best.d2) search(far, query, best);
  }

  void radius_collect(int id, const Vec3& query, double r2, std::vector<int>& out) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        int idx = order_[i];
        if ((query - points_[idx]).squaredNorm() <= r2) out.push_back(idx);
      }
      return;
    }
    double diff = query[node.axis] - node.split;
    int near = diff < 0.0 ? node.left : node.right;
    int far = diff < 0.0 ? node.right : node.left;
    radius_collect(near, query, r2, out);
    if (diff * diff <= r2) radius_collect(far, query, r2, out);
  }

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Nearest-neighbor distance from `query` into the indexed set.
inline NNResult nn_distance(const Vec3& query, const NNIndex& index) {
  return index.nearest(query);
}

}  // namespace himo
