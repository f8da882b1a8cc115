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
#include <random>

#include "himo/chamfer.hpp"
#include "himo/geometry.hpp"
#include "himo/ground.hpp"
#include "himo/nn_index.hpp"
#include "oracles.hpp"

using namespace himo;

namespace {

RigidMotion random_motion(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  Eigen::Quaterniond q = Eigen::Quaterniond(Eigen::AngleAxisd(angle(rng), Vec3::UnitZ()) *
                                            Eigen::AngleAxisd(angle(rng) / 3, Vec3::UnitX()));
  RigidMotion m;
  m.rotation = q.normalized().toRotationMatrix();
  m.translation = Vec3(shift(rng), shift(rng), shift(rng));
  return m;
}

}  // namespace

TEST_CASE("nn_distance basics") {
  SECTION("identity query") {
    NNIndex index(std::vector<Vec3>{Vec3(0, 0, 0)});
    auto r = nn_distance(Vec3(0, 0, 0), index);
    CHECK(r.distance == 0.0);
    CHECK(r.index == 0);
  }
  SECTION("direct distances") {
    NNIndex index(std::vector<Vec3>{Vec3(1, 0, 0), Vec3(0, 2, 0)});
    auto r = nn_distance(Vec3(0, 0, 0), index);
    CHECK(r.distance == 1.0);
    CHECK(r.index == 0);
  }
  SECTION("empty index") {
    NNIndex index{std::vector<Vec3>{}};
    CHECK_THROWS_WITH(index.nearest(Vec3(0, 0, 0)), "empty point set");
  }
}

TEST_CASE("nn_distance matches brute force exactly, including ties") {
  std::mt19937_64 rng(7);
  // quantized coordinates force plenty of exact distance ties
  auto pts = oracle::random_points(rng, 500, 4.0, /*quantize=*/true);
  NNIndex index(pts);
  auto queries = oracle::random_points(rng, 100, 4.0, /*quantize=*/true);
  for (const auto& q : queries) {
    auto expect = oracle::brute_nn(q, pts);
    auto got = index.nearest(q);
    REQUIRE(got.distance == expect.first);
    REQUIRE(got.index == expect.second);
  }
}

TEST_CASE("nearest_within honors the cap") {
  std::mt19937_64 rng(8);
  auto pts = oracle::random_points(rng, 300, 5.0);
  NNIndex index(pts);
  auto queries = oracle::random_points(rng, 80, 8.0);
  for (const auto& q : queries) {
    auto expect = oracle::brute_nn(q, pts);
    auto got = index.nearest_within(q, 2.0);
    if (expect.first <= 2.0) {
      REQUIRE(got.index == expect.second);
      REQUIRE(got.distance == expect.first);
    } else {
      REQUIRE(got.index == -1);
    }
  }
}

TEST_CASE("chamfer basics") {
  std::vector<Vec3> a{Vec3(0, 0, 0), Vec3(1, 1, 1)};
  SECTION("identical sets give zero") { CHECK(chamfer(a, a) == 0.0); }
  SECTION("single-point case") {
    std::vector<Vec3> p{Vec3(0, 0, 0)}, q{Vec3(1, 0, 0)};
    CHECK(chamfer(p, q) == 2.0);
  }
  SECTION("empty set") {
    std::vector<Vec3> empty;
    CHECK_THROWS_WITH(chamfer(a, empty), "empty point set");
    CHECK_THROWS_WITH(chamfer(empty, a), "empty point set");
  }
}

TEST_CASE("chamfer matches the brute-force double sum") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 5; ++round) {
    auto a = oracle::random_points(rng, 300, 10.0);
    auto b = oracle::random_points(rng, 300, 10.0);
    CHECK_THAT(chamfer(a, b),
               Catch::Matchers::WithinAbs(oracle::brute_chamfer(a, b), 1e-9));
    CHECK_THAT(chamfer(a, b, /*squared=*/true),
               Catch::Matchers::WithinAbs(oracle::brute_chamfer(a, b, true), 1e-9));
  }
}

TEST_CASE("chamfer properties") {
  std::mt19937_64 rng(13);
  auto a = oracle::random_points(rng, 200, 5.0);
  auto b = oracle::random_points(rng, 150, 5.0);

  SECTION("symmetry") { CHECK(chamfer(a, b) == chamfer(b, a)); }
  SECTION("self distance is zero") { CHECK(chamfer(a, a) == 0.0); }
  SECTION("rigid invariance") {
    RigidMotion m = random_motion(rng);
    std::vector<Vec3> ma, mb;
    for (const auto& p : a) ma.push_back(m.apply(p));
    for (const auto& p : b) mb.push_back(m.apply(p));
    CHECK_THAT(chamfer(ma, mb), Catch::Matchers::WithinAbs(chamfer(a, b), 1e-9));
  }
}

TEST_CASE("transform") {
  std::mt19937_64 rng(17);
  std::vector<TimedPoint> pts(50);
  auto raw = oracle::random_points(rng, 50, 10.0);
  for (int i = 0; i < 50; ++i) {
    pts[i].position = raw[i];
    pts[i].t = i * 0.001;
    pts[i].sensor_id = static_cast<std::uint8_t>(i % 3);
  }

  SECTION("identity is bit-exact") {
    auto out = transform(pts, RigidMotion::identity());
    for (int i = 0; i < 50; ++i) {
      CHECK(out[i].position == pts[i].position);
      CHECK(out[i].t == pts[i].t);
      CHECK(out[i].sensor_id == pts[i].sensor_id);
    }
  }
  SECTION("pure translation") {
    RigidMotion m;
    m.translation = Vec3(1, 0, 0);
    auto out = transform({{Vec3(0, 0, 0), 0.0, 0, false}}, m);
    CHECK(out[0].position == Vec3(1, 0, 0));
  }
  SECTION("inverse composition returns the input") {
    RigidMotion m = random_motion(rng);
    auto out = transform(transform(pts, m), m.inverse());
    for (int i = 0; i < 50; ++i)
      CHECK_THAT((out[i].position - pts[i].position).norm(),
                 Catch::Matchers::WithinAbs(0.0, 1e-9));
  }
  SECTION("pairwise distances preserved") {
    RigidMotion m = random_motion(rng);
    auto out = transform(pts, m);
    for (int i = 0; i < 50; i += 7)
      for (int j = i + 1; j < 50; j += 5)
        CHECK_THAT((out[i].position - out[j].position).norm(),
                   Catch::Matchers::WithinAbs((pts[i].position - pts[j].position).norm(),
                                              1e-9));
  }
}

TEST_CASE("rigid motion validity check") {
  RigidMotion ok;
  CHECK(ok.is_valid_rotation());
  RigidMotion reflected;
  reflected.rotation.col(0) = -reflected.rotation.col(0);
  CHECK_FALSE(reflected.is_valid_rotation());
  RigidMotion skew;
  skew.rotation(0, 1) = 1e-6;
  CHECK_FALSE(skew.is_valid_rotation());
}

namespace {

Frame plane_and_box_frame(double tilt_deg, std::vector<bool>* is_plane) {
  Frame frame;
  frame.t_sensor = 0.1;
  double tilt = tilt_deg * M_PI / 180.0;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> xy(-20.0, 20.0);
  for (int i = 0; i < 4000; ++i) {
    double x = xy(rng), y = xy(rng);
    TimedPoint p;
    p.position = Vec3(x, y, std::tan(tilt) * x);
    frame.points.push_back(p);
    if (is_plane) is_plane->push_back(true);
  }
  std::uniform_real_distribution<double> bx(-2.0, 2.0), bz(0.5, 2.0);
  for (int i = 0; i < 600; ++i) {
    TimedPoint p;
    double x = bx(rng) + 5.0;
    // box floats 0.5..2.0 m above the (possibly tilted) plane
    p.position = Vec3(x, bx(rng), std::tan(tilt) * x + bz(rng));
    frame.points.push_back(p);
    if (is_plane) is_plane->push_back(false);
  }
  return frame;
}

}  // namespace

TEST_CASE("remove_ground flags exactly the plane on flat scenes") {
  std::vector<bool> is_plane;
  Frame frame = plane_and_box_frame(0.0, &is_plane);
  Frame out = remove_ground(frame);
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(out.points[i].ground == is_plane[i]);
}

TEST_CASE("remove_ground handles a tilted plane") {
  std::vector<bool> is_plane;
  Frame frame = plane_and_box_frame(5.0, &is_plane);
  Frame out = remove_ground(frame);
  std::size_t flagged = 0, plane_points = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (is_plane[i]) {
      ++plane_points;
      if (out.points[i].ground) ++flagged;
    } else {
      CHECK_FALSE(out.points[i].ground);
    }
  }
  CHECK(flagged >= static_cast<std::size_t>(0.99 * plane_points));
}

TEST_CASE("remove_ground vacuous cases") {
  SECTION("no candidates below the threshold") {
    Frame frame;
    frame.t_sensor = 0.1;
    for (int i = 0; i < 100; ++i)
      frame.points.push_back({Vec3(i * 0.1, 0.0, 3.0 + i * 0.01), 0.0, 0, false});
    Frame out = remove_ground(frame);
    for (const auto& p : out.points) CHECK_FALSE(p.ground);
  }
  SECTION("flags never delete points") {
    std::vector<bool> is_plane;
    Frame frame = plane_and_box_frame(0.0, &is_plane);
    CHECK(remove_ground(frame).size() == frame.size());
  }
}
