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

// Brute-force reference implementations used as test oracles. Everything in
// this header is written against plain loops, independent of the library's
// spatial indexing and metric code paths.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Vec3 = Eigen::Vector3d;

// O(n) scan, strict < keeps the lowest index on ties.
inline std::pair<double, int> brute_nn(const Vec3& query, const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  int idx = -1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double d2 = (query - pts[i]).squaredNorm();
    if (d2 < best) {
      best = d2;
      idx = static_cast<int>(i);
    }
  }
  return {std::sqrt(best), idx};
}

inline double brute_directed_chamfer(const std::vector<Vec3>& a,
                                     const std::vector<Vec3>& b, bool squared = false) {
  double sum = 0.0;
  for (const auto& p : a) {
    double d = brute_nn(p, b).first;
    sum += squared ? d * d : d;
  }
  return sum / static_cast<double>(a.size());
}

inline double brute_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                            bool squared = false) {
  return brute_directed_chamfer(a, b, squared) + brute_directed_chamfer(b, a, squared);
}

// Cluster-weighted Chamfer score over member index lists, double-loop form.
inline double brute_cde(const std::vector<Vec3>& est, const std::vector<Vec3>& ref,
                        const std::vector<std::vector<int>>& members, bool literal) {
  std::size_t total = 0;
  int n_clusters = 0;
  for (const auto& m : members) {
    total += m.size();
    if (!m.empty()) ++n_clusters;
  }
  double acc = 0.0;
  for (const auto& m : members) {
    if (m.empty()) continue;
    std::vector<Vec3> a, b;
    for (int i : m) {
      a.push_back(est[i]);
      b.push_back(ref[i]);
    }
    acc += (static_cast<double>(m.size()) / total) * brute_chamfer(a, b);
  }
  return literal ? acc / n_clusters : acc;
}

inline double brute_mpe(const std::vector<Vec3>& est, const std::vector<Vec3>& ref,
                        const std::vector<std::vector<int>>& members, bool literal) {
  std::size_t total = 0;
  int n_clusters = 0;
  double sum = 0.0;
  for (const auto& m : members) {
    if (m.empty()) continue;
    ++n_clusters;
    total += m.size();
    for (int i : m) sum += (est[i] - ref[i]).norm();
  }
  double denom = static_cast<double>(total);
  if (literal) denom *= n_clusters;
  return sum / denom;
}

// Representative cluster flow: anchor = member with the largest NN distance
// into the target set (lowest index on ties), flow = anchor's NN minus anchor.
inline Vec3 brute_cluster_flow(const std::vector<Vec3>& cur,
                               const std::vector<int>& members,
                               const std::vector<Vec3>& target) {
  int anchor = -1;
  double best = -1.0;
  for (int i : members) {
    double d = brute_nn(cur[i], target).first;
    if (d > best) {
      best = d;
      anchor = i;
    }
  }
  auto [d, nn] = brute_nn(cur[anchor], target);
  (void)d;
  return target[nn] - cur[anchor];
}

struct BruteLoss {
  double l_cham = 0.0, l_dcham = 0.0, l_static = 0.0, l_dcls = 0.0, total = 0.0;
};

// Term-by-term evaluation of the four-part loss with plain loops. `flows`
// already has abstentions zeroed; dynamic/cluster per point, -1 = unclustered.
inline BruteLoss brute_loss(const std::vector<Vec3>& cur, const std::vector<Vec3>& flows,
                            const std::vector<int>& cluster_of,
                            const std::vector<bool>& dynamic,
                            const std::vector<Vec3>& prev_all,
                            const std::vector<Vec3>& next_all,
                            const std::vector<Vec3>& prev_dyn,
                            const std::vector<Vec3>& next_dyn) {
  BruteLoss out;
  std::vector<Vec3> fwd, bwd, dfwd, dbwd;
  std::vector<Vec3> static_flows;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    fwd.push_back(cur[i] + flows[i]);
    bwd.push_back(cur[i] - flows[i]);
    if (dynamic[i]) {
      dfwd.push_back(cur[i] + flows[i]);
      dbwd.push_back(cur[i] - flows[i]);
    } else {
      static_flows.push_back(flows[i]);
    }
  }
  out.l_cham = brute_chamfer(fwd, next_all) + brute_chamfer(bwd, prev_all);
  if (!dfwd.empty() && !next_dyn.empty() && !prev_dyn.empty()) {
    out.l_dcham = brute_chamfer(dfwd, next_dyn) + brute_chamfer(dbwd, prev_dyn);
    int n_clusters = 0;
    for (int c : cluster_of) n_clusters = std::max(n_clusters, c + 1);
    double sum = 0.0;
    std::size_t n_dyn = 0;
    for (int c = 0; c < n_clusters; ++c) {
      std::vector<int> members;
      for (std::size_t i = 0; i < cur.size(); ++i)
        if (cluster_of[i] == c && dynamic[i]) members.push_back(static_cast<int>(i));
      if (members.empty()) continue;
      Vec3 rep = brute_cluster_flow(cur, members, next_dyn);
      for (int i : members) {
        sum += (flows[i] - rep).squaredNorm();
        ++n_dyn;
      }
    }
    if (n_dyn > 0) out.l_dcls = sum / static_cast<double>(n_dyn);
  }
  if (!static_flows.empty()) {
    double sum = 0.0;
    for (const auto& f : static_flows) sum += f.squaredNorm();
    out.l_static = sum / static_cast<double>(static_flows.size());
  }
  out.total = out.l_cham + out.l_dcham + out.l_static + out.l_dcls;
  return out;
}

// Least-squares line fit, returns R^2.
inline double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0, mean = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double fit = slope * x[i] + intercept;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return 1.0 - ss_res / ss_tot;
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, int n, double extent,
                                       bool quantize = false) {
  std::uniform_real_distribution<double> dist(-extent, extent);
  std::vector<Vec3> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec3 p(dist(rng), dist(rng), dist(rng));
    if (quantize)
      for (int a = 0; a < 3; ++a) p[a] = std::round(p[a] * 2.0) / 2.0;
    out.push_back(p);
  }
  return out;
}

}  // namespace oracle
