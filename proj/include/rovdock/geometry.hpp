/*
 * Copyright 2026 rovdock contributors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "rovdock/error.hpp"

namespace rovdock {

/// Reference frames used throughout the stack.
///
/// WORLD_NED: x North, y East, z Down, origin at the nominal station
///            surface position, z = 0 at the surface.
/// STATION:   attached to the docking station, origin at the entry center
///            on the front face, x pointing into the station, y starboard
///            of that direction, z down.
/// TAG_STAR:  frame of the main marker above the station entry; the
///            station->tag* transform comes from the marker layout.
/// BODY:      vehicle body frame, x forward, y starboard, z down.
/// CAMERA:    forward camera optical frame, z along the optical axis,
///            x image-right, y image-down.
enum class FrameId { WORLD_NED, STATION, TAG_STAR, BODY, CAMERA };

inline const char* to_string(FrameId f) {
  switch (f) {
    case FrameId::WORLD_NED: return "WORLD_NED";
    case FrameId::STATION: return "STATION";
    case FrameId::TAG_STAR: return "TAG_STAR";
    case FrameId::BODY: return "BODY";
    case FrameId::CAMERA: return "CAMERA";
  }
  return "?";
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * M_PI;
  double r = std::fmod(a, two_pi);
  if (r <= -M_PI) r += two_pi;
  if (r > M_PI) r -= two_pi;
  return r;
}

/// Rigid-body pose. `frame` names the frame the pose is expressed in;
/// the child frame is a caller convention (see compose/invert).
/// Orientation follows the Z-Y-X (yaw-pitch-roll) Euler convention.
struct Pose {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  Eigen::Quaterniond orientation{Eigen::Quaterniond::Identity()};
  FrameId frame{FrameId::WORLD_NED};

  static Pose identity(FrameId f = FrameId::WORLD_NED) {
    Pose p;
    p.frame = f;
    return p;
  }

  static Pose from_euler(const Eigen::Vector3d& position_m, double roll, double pitch,
                         double yaw, FrameId f = FrameId::WORLD_NED) {
    Pose p;
    p.position = position_m;
    p.orientation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                    Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                    Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX());
    p.frame = f;
    return p;
  }

  /// Euler angles (Z-Y-X). Yaw in (-pi, pi]; near gimbal lock (|pitch|
  /// close to 90 deg) roll/yaw split is not unique.
  double roll() const {
    const Eigen::Quaterniond& q = orientation;
    return std::atan2(2.0 * (q.w() * q.x() + q.y() * q.z()),
                      1.0 - 2.0 * (q.x() * q.x() + q.y() * q.y()));
  }
  double pitch() const {
    const Eigen::Quaterniond& q = orientation;
    double s = 2.0 * (q.w() * q.y() - q.z() * q.x());
    s = std::clamp(s, -1.0, 1.0);
    return std::asin(s);
  }
  double yaw() const {
    const Eigen::Quaterniond& q = orientation;
    return wrap_angle(std::atan2(2.0 * (q.w() * q.z() + q.x() * q.y()),
                                 1.0 - 2.0 * (q.y() * q.y() + q.z() * q.z())));
  }

  Eigen::Matrix3d rotation() const { return orientation.toRotationMatrix(); }

  /// Maps a point from the child frame into `frame`.
  Eigen::Vector3d transform(const Eigen::Vector3d& p_child) const {
    return orientation * p_child + position;
  }
};

/// a composed with b: a maps mid->parent, b maps child->mid. The caller is
/// responsible for the frame chain lining up; the result keeps a's frame.
inline Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.orientation = (a.orientation * b.orientation).normalized();
  out.position = a.orientation * b.position + a.position;
  out.frame = a.frame;
  return out;
}

/// Inverse transform. The result is expressed in the (caller-known) child
/// frame; the FrameId tag is preserved unless retagged.
inline Pose invert(const Pose& p) {
  Pose out;
  out.orientation = p.orientation.conjugate();
  out.position = -(out.orientation * p.position);
  out.frame = p.frame;
  return out;
}

/// Body-frame twist: linear u,v,w and angular p,q,r.
struct BodyVelocity {
  Eigen::Vector3d linear{Eigen::Vector3d::Zero()};
  Eigen::Vector3d angular{Eigen::Vector3d::Zero()};
};

inline void require_frame(const Pose& p, FrameId expected, const char* where) {
  if (p.frame != expected) {
    throw Error(ErrorCode::FRAME_MISMATCH,
                std::string(where) + ": expected " + to_string(expected) + ", got " +
                    to_string(p.frame));
  }
}

inline bool finite(const Eigen::Vector3d& v) { return v.allFinite(); }

}  // namespace rovdock
