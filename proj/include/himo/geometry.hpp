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

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace himo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform: rotation followed by translation. Holds ego poses,
/// sensor mounts and per-cluster ICP results.
struct RigidMotion {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidMotion identity() { return {}; }

  static RigidMotion from_yaw(double yaw, const Vec3& t = Vec3::Zero()) {
    RigidMotion m;
    m.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
    m.translation = t;
    return m;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidMotion inverse() const {
    RigidMotion inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  RigidMotion operator*(const RigidMotion& other) const {
    RigidMotion out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  /// Orthonormal with determinant +1, checked to `tol`.
  bool is_valid_rotation(double tol = 1e-9) const {
    Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
    return err.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

/// Constant-velocity interpolation between two poses: translation is linear,
/// rotation follows the quaternion geodesic. Exact at u = 0 and u = 1.
inline RigidMotion interpolate(const RigidMotion& a, const RigidMotion& b, double u) {
  if (u <= 0.0) return a;
  if (u >= 1.0) return b;
  RigidMotion out;
  out.translation = (1.0 - u) * a.translation + u * b.translation;
  if (a.rotation == b.rotation) {
    out.rotation = a.rotation;  // pure translation, skip the slerp machinery
  } else {
    Eigen::Quaterniond qa(a.rotation), qb(b.rotation);
    out.rotation = qa.slerp(u, qb).toRotationMatrix();
  }
  return out;
}

/// One LiDAR return: 3D sample plus capture time (seconds from scan start)
/// and the id of the sensor that produced it.
struct TimedPoint {
  Vec3 position = Vec3::Zero();
  double t = 0.0;
  std::uint8_t sensor_id = 0;
  bool ground = false;  // set by ground removal
};

/// Maps positions by rotation then translation; timestamps and ids unchanged.
inline std::vector<TimedPoint> transform(const std::vector<TimedPoint>& points,
                                         const RigidMotion& m) {
  std::vector<TimedPoint> out(points);
  for (auto& p : out) p.position = m.apply(p.position);
  return out;
}

}  // namespace himo
