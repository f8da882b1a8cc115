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

#include <optional>
#include <string>
#include <vector>

#include "himo/autolabel.hpp"
#include "himo/comp.hpp"
#include "himo/flow_estimator.hpp"
#include "himo/flow_loss.hpp"
#include "himo/ground.hpp"
#include "himo/metrics.hpp"
#include "himo/sim_scanner.hpp"
#include "himo/tracks.hpp"

namespace himo {

/// Knobs shared by the CLI and the test harness.
struct RunConfig {
  std::string estimator = "icp+refine";
  double tau_d = 0.25;
  double tau1 = 0.3;
  double tau2 = 0.8;
  double voxel = 0.2;
  int window = 5;
  CompensationTarget target = CompensationTarget::kScanEnd;
  bool literal_normalization = true;
  double bin_width = 10.0;
  std::uint64_t seed = 0;
  GroundRemovalParams ground;
  IcpParams icp;
  RefineParams refine;
  ClusterParams clustering;
};

/// Auto-labels one sequence of co-registered frames: clustering, the two
/// point-level dynamic classifiers, and cluster-wise reassignment. The
/// per-frame seen-empty voxel sets are carved once and reused across the
/// sliding windows.
inline std::vector<DynamicLabels> label_sequence(const std::vector<Frame>& world,
                                                 const RunConfig& cfg,
                                                 const FreeSpaceParams& freespace) {
  std::size_t n = world.size();
  std::vector<FreeSpaceGrid> carved(n);
  for (std::size_t f = 0; f < n; ++f) carved[f] = carve_frame(world[f], freespace);

  std::vector<DynamicLabels> labels(n);
  int half = cfg.window / 2;
  for (std::size_t t = 0; t < n; ++t) {
    ClusterSet clusters = cluster(world[t], cfg.clustering);

    std::vector<const FreeSpaceGrid*> others;
    std::size_t lo = t > static_cast<std::size_t>(half) ? t - half : 0;
    std::size_t hi = std::min(n, t + half + 1);
    for (std::size_t f = lo; f < hi; ++f)
      if (f != t) others.push_back(&carved[f]);
    std::vector<int> dufo = others.empty()
                                ? std::vector<int>{}
                                : seen_empty_points(world[t], others, freespace.voxel);

    std::vector<int> nnd;
    if (t + 1 < n)
      nnd = dynamic_nn(world[t], world[t + 1], cfg.tau_d);
    else if (n >= 2)
      nnd = dynamic_nn(world[t], world[t - 1], cfg.tau_d);

    labels[t] = reassign(clusters, dufo, nnd, cfg.tau1, cfg.tau2);
  }
  return labels;
}

/// Output of the compensation pipeline for one frame.
struct CompensatedFrame {
  Frame frame;  // expressed in the ego frame at the compensation target
  DistortionField applied;
  FlowField flow;                  // in the common world frame
  std::optional<LossReport> loss;  // interior frames only, when requested
};

/// End-to-end non-ego compensation of a raw frame sequence: ego compensation,
/// ground removal, auto-labeling, flow estimation, per-point correction.
inline std::vector<CompensatedFrame> compensate_sequence(
    const std::vector<Frame>& raw, const RunConfig& cfg,
    const sim::LidarRig* rig = nullptr, std::vector<DynamicLabels>* labels_out = nullptr,
    bool with_loss = false) {
  std::unique_ptr<FlowEstimator> estimator =
      make_estimator(cfg.estimator, cfg.icp, cfg.refine);
  bool needs_labels = cfg.estimator != "oracle" && cfg.estimator != "zero";
  if (raw.size() < 2 && needs_labels)
    throw std::runtime_error("insufficient temporal context");

  std::vector<Frame> world;
  world.reserve(raw.size());
  GroundRemovalParams ground = cfg.ground;
  ground.seed = hash_combine(cfg.seed, 0x67726e64ULL);
  for (const auto& frame : raw)
    world.push_back(remove_ground(place_in_world(ego_compensate(frame, cfg.target), cfg.target),
                                  ground));

  FreeSpaceParams freespace;
  freespace.voxel = cfg.voxel;
  if (rig)
    for (const auto& s : rig->sensors)
      freespace.sensor_offsets.push_back(s.mount.translation);

  std::vector<DynamicLabels> labels;
  if (needs_labels || labels_out || with_loss)
    labels = label_sequence(world, cfg, freespace);
  if (labels_out) *labels_out = labels;

  std::vector<CompensatedFrame> out;
  out.reserve(world.size());
  for (std::size_t t = 0; t < world.size(); ++t) {
    FlowContext ctx;
    ctx.cur = &world[t];
    if (!labels.empty()) ctx.cur_labels = &labels[t];
    if (t > 0) {
      ctx.prev = &world[t - 1];
      if (!labels.empty()) ctx.prev_labels = &labels[t - 1];
    }
    if (t + 1 < world.size()) {
      ctx.next = &world[t + 1];
      if (!labels.empty()) ctx.next_labels = &labels[t + 1];
    }

    CompensatedFrame result;
    result.flow = estimator->estimate(ctx);
    auto [compensated, applied] = himo_compensate(world[t], result.flow);
    result.applied = std::move(applied);
    if (with_loss && ctx.prev && ctx.next && !labels.empty())
      result.loss = loss_report(*ctx.prev, *ctx.cur, *ctx.next, result.flow,
                                *ctx.prev_labels, *ctx.cur_labels, *ctx.next_labels);
    compensated.gt.reset();
    result.frame = place_in_ego(compensated, cfg.target);
    out.push_back(std::move(result));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct FrameEvaluation {
  int frame_index = 0;
  MetricsResult metrics;
};

struct SequenceEvaluation {
  std::vector<FrameEvaluation> frames;
  MetricsResult aggregate;  // per-frame means; bins averaged where present
};

/// Scores a compensated sequence against the reference corrections.
///
/// `est` carries the compensated positions (ego-target frame, ground flags
/// set); `raw` the matching uncompensated frames. The reference positions
/// come from the raw frames' ground-truth block when present, otherwise from
/// velocity-based correction using the supplied tracks. Cluster membership is
/// decided by the expanded boxes on the raw ego-compensated positions.
inline SequenceEvaluation evaluate_sequence(
    const std::vector<Frame>& est, const std::vector<Frame>& raw,
    const std::vector<std::vector<TrackedBox>>& tracks, const RunConfig& cfg) {
  if (est.size() != raw.size() || est.size() != tracks.size())
    throw std::runtime_error("sequence length mismatch");

  SequenceEvaluation out;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (est[i].size() != raw[i].size())
      throw std::runtime_error("point correspondence broken");

    Frame raw_world = place_in_world(ego_compensate(raw[i], cfg.target), cfg.target);
    for (std::size_t p = 0; p < raw_world.size(); ++p)
      raw_world.points[p].ground = est[i].points[p].ground;

    Frame est_world = est[i];
    est_world.ref = PointsRef::kEgoTarget;
    est_world = place_in_world(est_world, cfg.target);

    std::vector<Vec3> ref_positions(raw_world.size());
    if (raw_world.gt) {
      for (std::size_t p = 0; p < raw_world.size(); ++p)
        ref_positions[p] = raw_world.points[p].position + raw_world.gt->correction[p];
    } else {
      Frame gt_frame = make_gt(raw_world, tracks[i]);
      for (std::size_t p = 0; p < raw_world.size(); ++p)
        ref_positions[p] = gt_frame.points[p].position;
    }

    auto expanded = expand_boxes(tracks[i], raw_world.t_sensor);
    BoxAssignment assignment = assign_to_boxes(raw_world, expanded);

    FrameEvaluation fe;
    fe.frame_index = static_cast<int>(i);
    fe.metrics = evaluate_frame(est_world.positions(), ref_positions, tracks[i],
                                assignment.members, cfg.literal_normalization,
                                cfg.bin_width);
    out.frames.push_back(std::move(fe));
  }

  // aggregate: plain means over frames, bins averaged over frames where seen
  MetricsResult& agg = out.aggregate;
  agg.literal_normalization = cfg.literal_normalization;
  std::map<int, std::pair<VelocityBinRow, int>> bin_acc;
  for (const auto& fe : out.frames) {
    const MetricsResult& m = fe.metrics;
    agg.cde_total += m.cde_total;
    agg.cde_car += m.cde_car;
    agg.cde_others += m.cde_others;
    agg.mpe_total += m.mpe_total;
    agg.mpe_car += m.mpe_car;
    agg.mpe_others += m.mpe_others;
    agg.clusters_car += m.clusters_car;
    agg.clusters_others += m.clusters_others;
    agg.points_total += m.points_total;
    for (const auto& row : m.bins) {
      auto& [acc, count] = bin_acc.try_emplace(row.bin, VelocityBinRow{}, 0).first->second;
      acc.bin = row.bin;
      acc.speed_lo = row.speed_lo;
      acc.speed_hi = row.speed_hi;
      acc.cde += row.cde;
      acc.mpe += row.mpe;
      acc.clusters += row.clusters;
      acc.points += row.points;
      ++count;
    }
  }
  double n = static_cast<double>(out.frames.size());
  if (n > 0) {
    agg.cde_total /= n;
    agg.cde_car /= n;
    agg.cde_others /= n;
    agg.mpe_total /= n;
    agg.mpe_car /= n;
    agg.mpe_others /= n;
  }
  for (auto& [bin, entry] : bin_acc) {
    auto& [row, count] = entry;
    row.cde /= count;
    row.mpe /= count;
    agg.bins.push_back(row);
  }
  return out;
}

}  // namespace himo
