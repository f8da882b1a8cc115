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

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "himo/config_io.hpp"
#include "himo/frame_io.hpp"
#include "himo/pipeline.hpp"
#include "himo/ply_io.hpp"

namespace fs = std::filesystem;
using himo::io::json;

namespace {

// exit codes: 0 ok, 1 generic, 2 unreadable scene/rig, 3 insufficient
// temporal context, 4 sequence length mismatch, 5 unwritable output path
constexpr int kExitConfig = 2;
constexpr int kExitContext = 3;
constexpr int kExitMismatch = 4;
constexpr int kExitUnwritable = 5;

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.bin", index);
  return buf;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("frame_") && name.ends_with(".bin"))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<himo::Frame> load_frames(const fs::path& dir) {
  std::vector<himo::Frame> frames;
  for (const auto& path : list_frames(dir)) {
    frames.push_back(himo::io::load_frame(path));
    frames.back().frame_index = static_cast<int>(frames.size()) - 1;
  }
  if (frames.empty()) throw std::runtime_error("no frame files in " + dir.string());
  return frames;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonOpts {
  himo::RunConfig cfg;
  std::string target = "scan-end";
  std::string cde_norm = "literal";

  void finalize() {
    cfg.target = target == "mid-scan" ? himo::CompensationTarget::kMidScan
                                      : himo::CompensationTarget::kScanEnd;
    cfg.literal_normalization = cde_norm != "weighted-mean";
  }
};

void add_pipeline_flags(CLI::App* app, CommonOpts& opts) {
  app->add_option("--estimator", opts.cfg.estimator,
                  "flow estimator: oracle|icp|upper-bound|icp+refine|zero")
      ->check(CLI::IsMember({"oracle", "icp", "upper-bound", "icp+refine", "zero"}));
  app->add_option("--tau-d", opts.cfg.tau_d, "NN dynamic threshold, meters");
  app->add_option("--tau1", opts.cfg.tau1, "reassign lower ratio threshold");
  app->add_option("--tau2", opts.cfg.tau2, "reassign upper ratio threshold");
  app->add_option("--voxel", opts.cfg.voxel, "free-space voxel size, meters");
  app->add_option("--window", opts.cfg.window, "free-space window, frames");
  app->add_option("--target", opts.target, "compensation target")
      ->check(CLI::IsMember({"scan-end", "mid-scan"}));
  app->add_option("--seed", opts.cfg.seed, "random seed");
}

json config_json(const CommonOpts& opts) {
  return json{{"estimator", opts.cfg.estimator}, {"tau_d", opts.cfg.tau_d},
              {"tau1", opts.cfg.tau1},           {"tau2", opts.cfg.tau2},
              {"voxel", opts.cfg.voxel},         {"window", opts.cfg.window},
              {"target", opts.target},           {"cde_norm", opts.cde_norm},
              {"seed", opts.cfg.seed}};
}

int cmd_simulate(const std::string& scene_arg, const std::string& rig_arg, int n_frames,
                 double noise_override, CommonOpts& opts, const fs::path& out_dir) {
  himo::sim::SceneSpec scene;
  himo::sim::LidarRig rig;
  try {
    scene = himo::io::load_scene(scene_arg);
    rig = himo::io::load_rig(rig_arg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  if (noise_override >= 0.0) rig.noise_sigma = noise_override;

  fs::create_directories(out_dir);
  auto frames = himo::sim::scan(scene, rig, n_frames, opts.cfg.seed);
  std::vector<std::vector<himo::TrackedBox>> tracks;
  for (int k = 0; k < n_frames; ++k) {
    himo::io::save_frame(out_dir / frame_name(k), frames[k]);
    tracks.push_back(himo::sim::tracks_at(scene, k, rig.t_sensor()));
  }
  himo::io::save_json(out_dir / "tracks.json", himo::io::tracks_to_json(tracks));

  json config = config_json(opts);
  config["scene"] = scene_arg;
  config["rig"] = rig_arg;
  config["frames"] = n_frames;
  config["noise_sigma"] = rig.noise_sigma;
  json manifest{{"command", "simulate"},
                {"seed", opts.cfg.seed},
                {"config", config},
                {"config_hash", himo::fnv1a(config.dump())}};
  himo::io::save_json(out_dir / "manifest.json", manifest);
  std::printf("wrote %d frames to %s (%zu points in frame 0)\n", n_frames,
              out_dir.string().c_str(), frames[0].size());
  return 0;
}

void save_corrections(const fs::path& path, const himo::DistortionField& field) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os.write("HIMD", 4);
  std::uint64_t n = field.size();
  os.write(reinterpret_cast<const char*>(&n), 8);
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<float> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<float>(field.vectors[i][axis]);
    os.write(reinterpret_cast<const char*>(col.data()),
             static_cast<std::streamsize>(n * 4));
  }
}

int cmd_compensate(const fs::path& in_dir, const fs::path& out_dir,
                   const std::string& rig_arg, CommonOpts& opts, bool dump_labels,
                   bool dump_loss) {
  auto raw = load_frames(in_dir);
  bool needs_context =
      opts.cfg.estimator != "oracle" && opts.cfg.estimator != "zero";
  if (raw.size() < 2 && needs_context) {
    std::fprintf(stderr, "error: insufficient temporal context (%zu frame)\n", raw.size());
    return kExitContext;
  }

  himo::sim::LidarRig rig;
  bool have_rig = false;
  if (!rig_arg.empty()) {
    try {
      rig = himo::io::load_rig(rig_arg);
      have_rig = true;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitConfig;
    }
  }

  std::vector<himo::DynamicLabels> labels;
  auto results = himo::compensate_sequence(raw, opts.cfg, have_rig ? &rig : nullptr,
                                           dump_labels ? &labels : nullptr, dump_loss);

  fs::create_directories(out_dir);
  for (std::size_t k = 0; k < results.size(); ++k) {
    himo::io::save_frame(out_dir / frame_name(static_cast<int>(k)), results[k].frame,
                         /*include_gt=*/false);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "corrections_%04zu.bin", k);
    save_corrections(out_dir / buf, results[k].applied);
    if (dump_labels) {
      std::snprintf(buf, sizeof(buf), "labels_%04zu.csv", k);
      std::ofstream os(out_dir / buf, std::ios::trunc);
      os << "index,dynamic,cluster\n";
      for (std::size_t i = 0; i < labels[k].size(); ++i)
        os << i << "," << int(labels[k].dynamic[i]) << "," << labels[k].cluster[i] << "\n";
    }
  }
  if (dump_loss) {
    std::ofstream os(out_dir / "loss.csv", std::ios::trunc);
    os << "frame,l_cham,l_dcham,l_static,l_dcls,total\n";
    for (std::size_t k = 0; k < results.size(); ++k) {
      if (!results[k].loss) continue;
      const auto& l = *results[k].loss;
      os << k << "," << fmt(l.l_cham) << "," << fmt(l.l_dcham) << "," << fmt(l.l_static)
         << "," << fmt(l.l_dcls) << "," << fmt(l.total) << "\n";
    }
  }

  json config = config_json(opts);
  config["horizon_seconds"] = results.empty() ? 0.0 : results[0].flow.horizon_seconds;
  json manifest{{"command", "compensate"},
                {"seed", opts.cfg.seed},
                {"config", config},
                {"config_hash", himo::fnv1a(config.dump())}};
  himo::io::save_json(out_dir / "manifest.json", manifest);
  std::printf("compensated %zu frames with estimator '%s'\n", results.size(),
              opts.cfg.estimator.c_str());
  return 0;
}

int cmd_evaluate(const fs::path& est_dir, const fs::path& gt_dir,
                 const std::string& tracks_arg, CommonOpts& opts, const fs::path& out_dir) {
  auto est = load_frames(est_dir);
  auto raw = load_frames(gt_dir);
  fs::path tracks_path = tracks_arg.empty() ? gt_dir / "tracks.json" : fs::path(tracks_arg);
  auto tracks = himo::io::tracks_from_json(himo::io::load_json(tracks_path));

  if (est.size() != raw.size() || tracks.size() < est.size()) {
    std::fprintf(stderr, "error: sequence length mismatch (est %zu, gt %zu, tracks %zu)\n",
                 est.size(), raw.size(), tracks.size());
    return kExitMismatch;
  }
  tracks.resize(est.size());

  himo::SequenceEvaluation eval;
  try {
    eval = himo::evaluate_sequence(est, raw, tracks, opts.cfg);
  } catch (const std::exception& e) {
    std::string what = e.what();
    std::fprintf(stderr, "error: %s\n", what.c_str());
    return what.find("mismatch") != std::string::npos ||
                   what.find("correspondence") != std::string::npos
               ? kExitMismatch
               : 1;
  }

  fs::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "metrics.csv", std::ios::trunc);
    os << "frame,cde_total,cde_car,cde_others,mpe_total,mpe_car,mpe_others,"
          "clusters_car,clusters_others,points\n";
    for (const auto& fe : eval.frames) {
      const auto& m = fe.metrics;
      os << fe.frame_index << "," << fmt(m.cde_total) << "," << fmt(m.cde_car) << ","
         << fmt(m.cde_others) << "," << fmt(m.mpe_total) << "," << fmt(m.mpe_car) << ","
         << fmt(m.mpe_others) << "," << m.clusters_car << "," << m.clusters_others << ","
         << m.points_total << "\n";
    }
  }
  {
    std::ofstream os(out_dir / "bins.csv", std::ios::trunc);
    os << "frame,speed_lo,speed_hi,cde,mpe,clusters,points\n";
    for (const auto& fe : eval.frames)
      for (const auto& row : fe.metrics.bins)
        os << fe.frame_index << "," << fmt(row.speed_lo) << "," << fmt(row.speed_hi) << ","
           << fmt(row.cde) << "," << fmt(row.mpe) << "," << row.clusters << ","
           << row.points << "\n";
  }

  const auto& agg = eval.aggregate;
  json bins = json::array();
  for (const auto& row : agg.bins)
    bins.push_back({{"speed_lo", row.speed_lo},
                    {"speed_hi", row.speed_hi},
                    {"cde", row.cde},
                    {"mpe", row.mpe},
                    {"clusters", row.clusters},
                    {"points", row.points}});
  json config = config_json(opts);
  json summary{{"command", "evaluate"},
               {"frames", eval.frames.size()},
               {"cde_total", agg.cde_total},
               {"cde_car", agg.cde_car},
               {"cde_others", agg.cde_others},
               {"mpe_total", agg.mpe_total},
               {"mpe_car", agg.mpe_car},
               {"mpe_others", agg.mpe_others},
               {"literal_normalization", agg.literal_normalization},
               {"bins", bins},
               {"config", config},
               {"config_hash", himo::fnv1a(config.dump())}};
  himo::io::save_json(out_dir / "summary.json", summary);
  std::printf("CDE %.6f  MPE %.6f over %zu frames (%s normalization)\n", agg.cde_total,
              agg.mpe_total, eval.frames.size(),
              agg.literal_normalization ? "literal" : "weighted-mean");
  return 0;
}

int cmd_export_ply(const fs::path& in_file, const fs::path& out_file,
                   const std::string& color, const std::string& format) {
  himo::Frame frame = himo::io::load_frame(in_file);
  auto mode = color == "dynamic" ? himo::io::PlyColorMode::kDynamic
                                 : himo::io::PlyColorMode::kSensor;
  auto fmt_mode =
      format == "ascii" ? himo::io::PlyFormat::kAscii : himo::io::PlyFormat::kBinary;
  try {
    himo::io::export_ply(frame, out_file, mode, fmt_mode);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUnwritable;
  }
  std::printf("wrote %s (%zu points)\n", out_file.string().c_str(), frame.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rolling-shutter motion compensation for multi-LiDAR point clouds"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto* sim_cmd = app.add_subcommand("simulate", "scan a scripted scene");
  std::string scene_arg = "standard", rig_arg = "dual-180";
  int n_frames = 10;
  double noise_override = -1.0;
  fs::path sim_out = "out/sim";
  sim_cmd->add_option("--scene", scene_arg, "scene preset name or JSON path");
  sim_cmd->add_option("--rig", rig_arg, "rig preset name or JSON path");
  sim_cmd->add_option("--frames", n_frames, "number of frames (>= 2)");
  sim_cmd->add_option("--noise", noise_override, "override beam noise sigma, meters");
  sim_cmd->add_option("--out", sim_out, "output directory");
  add_pipeline_flags(sim_cmd, opts);

  auto* comp_cmd = app.add_subcommand("compensate", "undistort a frame sequence");
  fs::path comp_in, comp_out = "out/comp";
  std::string comp_rig;
  bool dump_labels = false, dump_loss = false;
  comp_cmd->add_option("--in", comp_in, "input frame directory")->required();
  comp_cmd->add_option("--out", comp_out, "output directory");
  comp_cmd->add_option("--rig", comp_rig, "rig preset/JSON for carve ray origins");
  comp_cmd->add_flag("--dump-labels", dump_labels, "write per-frame label CSVs");
  comp_cmd->add_flag("--dump-loss", dump_loss, "write per-frame loss CSV");
  add_pipeline_flags(comp_cmd, opts);

  auto* eval_cmd = app.add_subcommand("evaluate", "score compensated frames");
  fs::path eval_est, eval_gt, eval_out = "out/eval";
  std::string eval_tracks;
  eval_cmd->add_option("--est", eval_est, "compensated frame directory")->required();
  eval_cmd->add_option("--gt", eval_gt, "reference frame directory (raw simulate output)")
      ->required();
  eval_cmd->add_option("--tracks", eval_tracks, "tracks JSON (default <gt>/tracks.json)");
  eval_cmd->add_option("--out", eval_out, "output directory");
  eval_cmd->add_option("--cde-norm", opts.cde_norm, "metric normalization")
      ->check(CLI::IsMember({"literal", "weighted-mean"}));
  eval_cmd->add_option("--bin-width", opts.cfg.bin_width, "velocity bin width, m/s");
  add_pipeline_flags(eval_cmd, opts);

  auto* ply_cmd = app.add_subcommand("export-ply", "convert a frame file to PLY");
  fs::path ply_in, ply_out = "frame.ply";
  std::string ply_color = "sensor", ply_format = "binary";
  ply_cmd->add_option("--in", ply_in, "input frame file")->required();
  ply_cmd->add_option("--out", ply_out, "output PLY path");
  ply_cmd->add_option("--color", ply_color, "color mode")
      ->check(CLI::IsMember({"sensor", "dynamic"}));
  ply_cmd->add_option("--format", ply_format, "PLY encoding")
      ->check(CLI::IsMember({"ascii", "binary"}));

  CLI11_PARSE(app, argc, argv);
  opts.finalize();

  try {
    if (sim_cmd->parsed())
      return cmd_simulate(scene_arg, rig_arg, n_frames, noise_override, opts, sim_out);
    if (comp_cmd->parsed())
      return cmd_compensate(comp_in, comp_out, comp_rig, opts, dump_labels, dump_loss);
    if (eval_cmd->parsed())
      return cmd_evaluate(eval_est, eval_gt, eval_tracks, opts, eval_out);
    if (ply_cmd->parsed()) return cmd_export_ply(ply_in, ply_out, ply_color, ply_format);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
