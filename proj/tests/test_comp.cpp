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

#include <catch2/catch_amalgamated.hpp>

#include "himo/comp.hpp"
#include "himo/sim_scanner.hpp"
#include "himo/sim_scene.hpp"

using namespace himo;

TEST_CASE("ego_compensate with a stationary ego is the identity") {
  Frame frame;
  frame.t_sensor = 0.1;
  frame.points = {{Vec3(1, 2, 3), 0.02, 0, false}, {Vec3(-4, 0, 1), 0.1, 1, false}};
  Frame out = ego_compensate(frame);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    CHECK(out.points[i].position == frame.points[i].position);
    CHECK(out.points[i].t == frame.points[i].t);
  }
  CHECK(out.ref == PointsRef::kEgoTarget);
}

TEST_CASE("ego_compensate flattens a static wall under a moving ego") {
  sim::SceneSpec scene;
  scene.duration = 0.5;
  scene.ground.enabled = false;
  scene.ego_velocity = Vec3(10.0, 0.0, 0.0);
  scene.static_boxes = {{Vec3(30.0, 0.0, 2.0), Vec3(1.0, 10.0, 4.0)}};

  auto frames = sim::scan(scene, sim::single_top_rig(), 2, 1);
  Frame world = place_in_world(ego_compensate(frames[0]));

  // front-face points sit on the x = 29.5 plane; sides are at larger x
  std::vector<double> xs;
  for (const auto& p : world.points)
    if (p.position.x() < 29.5 + 0.01 && std::abs(p.position.y()) < 4.9)
      xs.push_back(p.position.x());
  REQUIRE(xs.size() > 100);
  for (double x : xs) CHECK_THAT(x, Catch::Matchers::WithinAbs(29.5, 1e-6));

  // raw data is skewed by the ego motion before compensation
  double raw_spread = 0.0;
  for (const auto& p : frames[0].points)
    if (p.position.z() > 0.2) raw_spread = std::max(raw_spread, p.position.x());
  double raw_min = 1e9;
  for (const auto& p : frames[0].points)
    if (p.position.z() > 0.2) raw_min = std::min(raw_min, p.position.x());
  CHECK(raw_spread - raw_min > 0.5);  // about v * t_sensor of smear
}

TEST_CASE("object correction is independent of ego speed after compensation") {
  auto scene_with_ego = [](double ego_speed) {
    sim::SceneSpec scene;
    scene.duration = 0.5;
    scene.ground = {true, 0.0, 100.0};
    scene.ego_velocity = Vec3(ego_speed, 0.0, 0.0);
    sim::ObjectSpec obj;
    obj.dims = Vec3(4.5, 2.0, 1.6);
    obj.initial_pose = RigidMotion::from_yaw(M_PI / 2, Vec3(0.0, 14.0, 1.15));
    obj.velocity = Vec3(0.0, 12.0, 0.0);
    obj.track_id = 1;
    scene.objects = {obj};
    return scene;
  };
  auto slow = sim::scan(scene_with_ego(0.0), sim::single_top_rig(), 2, 1);
  auto fast = sim::scan(scene_with_ego(15.0), sim::single_top_rig(), 2, 1);
  for (const auto* frames : {&slow, &fast}) {
    const Frame& f = (*frames)[0];
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!f.gt->dynamic[i]) continue;
      Vec3 expect = Vec3(0.0, 12.0, 0.0) * (f.t_sensor - f.points[i].t);
      CHECK_THAT((f.gt->correction[i] - expect).norm(),
                 Catch::Matchers::WithinAbs(0.0, 1e-9));
    }
  }
}

TEST_CASE("delta_t") {
  Frame frame;
  frame.t_sensor = 0.1;
  frame.points = {{Vec3::Zero(), 0.0, 0, false},
                  {Vec3::Zero(), 0.04, 0, false},
                  {Vec3::Zero(), 0.1, 0, false}};
  CHECK(delta_t(frame.points[2], frame) == 0.0);
  CHECK_THAT(delta_t(frame.points[0], frame), Catch::Matchers::WithinAbs(0.1, 1e-15));

  SECTION("monotonically decreasing in capture order on a sweep") {
    auto frames = sim::scan(sim::standard_scene(), sim::single_top_rig(), 2, 2);
    const Frame& f = frames[0];
    double last = 1e9;
    for (const auto& p : f.points) {
      double dt = delta_t(p, f);
      CHECK(dt <= last + 1e-15);
      CHECK(dt >= 0.0);
      CHECK(dt <= f.t_sensor);
      last = dt;
    }
  }
}

TEST_CASE("himo_compensate arithmetic") {
  Frame frame;
  frame.t_sensor = 0.1;
  frame.points = {{Vec3(5, 0, 0), 0.05, 0, false}, {Vec3(9, 1, 0), 0.1, 0, false}};

  SECTION("zero flow is the identity") {
    auto [out, applied] = himo_compensate(frame, FlowField::zeros(2, 0.1));
    CHECK(out.points[0].position == frame.points[0].position);
    CHECK(out.points[1].position == frame.points[1].position);
    CHECK(applied.vectors[0] == Vec3::Zero());
  }
  SECTION("correction follows flow / t_sensor * delta_t") {
    FlowField flow = FlowField::zeros(2, 0.1);
    flow.vectors[0] = Vec3(2, 0, 0);
    auto [out, applied] = himo_compensate(frame, flow);
    CHECK(applied.vectors[0] == Vec3(1, 0, 0));  // 2 / 0.1 * 0.05
    CHECK(out.points[0].position == Vec3(6, 0, 0));
    // the last point has delta_t = 0 and never moves
    CHECK(applied.vectors[1] == Vec3::Zero());
  }
  SECTION("invalid entries contribute zero correction") {
    FlowField flow = FlowField::zeros(2, 0.1);
    flow.vectors[0] = Vec3(2, 0, 0);
    flow.valid[0] = 0;
    auto [out, applied] = himo_compensate(frame, flow);
    CHECK(out.points[0].position == frame.points[0].position);
  }
  SECTION("misaligned flow is rejected") {
    CHECK_THROWS_WITH(himo_compensate(frame, FlowField::zeros(3, 0.1)),
                      "flow/frame mismatch");
  }
}

TEST_CASE("oracle flow compensates simulated objects exactly") {
  auto scene = sim::standard_scene();
  auto frames = sim::scan(scene, sim::dual_180_rig(), 2, 7);
  Frame world = place_in_world(ego_compensate(frames[0]));
  FlowField flow = sim::oracle_flow(world);
  auto [comp, applied] = himo_compensate(world, flow);

  double worst = 0.0, max_flow_excess = 0.0;
  for (std::size_t i = 0; i < world.size(); ++i) {
    Vec3 expect = world.points[i].position + world.gt->correction[i];
    worst = std::max(worst, (comp.points[i].position - expect).norm());
    max_flow_excess = std::max(
        max_flow_excess, applied.vectors[i].norm() - flow.vectors[i].norm());
  }
  CHECK(worst < 1e-9);
  // per-point correction magnitude never exceeds the flow magnitude
  CHECK(max_flow_excess <= 1e-12);
}

TEST_CASE("recompensating with the residual flow does not oscillate") {
  auto scene = sim::standard_scene();
  auto frames = sim::scan(scene, sim::dual_180_rig(), 2, 7);
  Frame world = place_in_world(ego_compensate(frames[0]));
  auto [once, first] = himo_compensate(world, sim::oracle_flow(world));

  // residual flow: remaining displacement to the reference, rescaled back to
  // a full-interval flow; zero where the point is already in place
  double t_last = once.max_time();
  FlowField residual = FlowField::zeros(once.size(), once.t_sensor);
  for (std::size_t i = 0; i < once.size(); ++i) {
    Vec3 target = world.points[i].position + world.gt->correction[i];
    Vec3 remaining = target - once.points[i].position;
    double dt = t_last - once.points[i].t;
    if (dt > 1e-12) residual.vectors[i] = remaining * (once.t_sensor / dt);
  }
  auto [twice, second] = himo_compensate(once, residual);

  double first_change = 0.0, second_change = 0.0;
  for (std::size_t i = 0; i < once.size(); ++i) {
    first_change += first.vectors[i].norm();
    second_change += second.vectors[i].norm();
  }
  CHECK(first_change > 1.0);
  CHECK(second_change < first_change * 1e-6);
}

TEST_CASE("mid-scan target differs from scan-end by a rigid shift") {
  sim::SceneSpec scene;
  scene.duration = 0.5;
  scene.ground = {true, 0.0, 50.0};
  scene.ego_velocity = Vec3(8.0, 0.0, 0.0);
  auto frames = sim::scan(scene, sim::single_top_rig(), 2, 1);
  Frame end = ego_compensate(frames[0], CompensationTarget::kScanEnd);
  Frame mid = ego_compensate(frames[0], CompensationTarget::kMidScan);
  Vec3 shift = end.points[0].position - mid.points[0].position;
  for (std::size_t i = 0; i < end.size(); ++i)
    CHECK_THAT((end.points[i].position - mid.points[i].position - shift).norm(),
               Catch::Matchers::WithinAbs(0.0, 1e-9));
  CHECK_THAT(shift.x(), Catch::Matchers::WithinAbs(-0.4, 1e-9));  // v * T/2
}
