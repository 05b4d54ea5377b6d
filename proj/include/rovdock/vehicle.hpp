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
#include <algorithm>
#include <cmath>
#include <vector>

#include "rovdock/geometry.hpp"

namespace rovdock {

/// 4-DOF rigid-body parameters (surge, sway, heave, yaw). Roll and pitch
/// are passively stable and held at zero by the truth model.
struct VehicleParams {
  double mass_kg = 10.0;
  Eigen::Vector3d added_mass_kg{5.0, 8.0, 10.0};        // per linear axis
  double yaw_inertia = 0.5;                              // kg m^2
  double yaw_added_inertia = 0.3;                        // kg m^2
  Eigen::Vector3d linear_damping{3.0, 10.0, 12.0};       // N s/m
  Eigen::Vector3d quad_damping{53.0, 80.0, 100.0};       // N s^2/m^2
  double yaw_linear_damping = 0.5;                       // N m s/rad
  double yaw_quad_damping = 2.0;                         // N m s^2/rad^2
  Eigen::Vector3d max_thrust_n{30.0, 25.0, 25.0};        // saturation per axis
  double max_yaw_moment_nm = 5.0;
  double max_speed_mps = 1.0;                            // vehicle envelope
  double sway_coupling = 0.05;  // fraction of surge thrust leaking into sway

  bool valid() const {
    return mass_kg > 0 && (added_mass_kg.array() >= 0).all() &&
           (linear_damping.array() >= 0).all() && (quad_damping.array() >= 0).all() &&
           (max_thrust_n.array() > 0).all() && max_yaw_moment_nm > 0;
  }
};

/// Horizontal water current. Inside the station bounding box the acrylic
/// walls block most of it; `shielding` is the blocked fraction.
struct CurrentField {
  Eigen::Vector2d velocity_ne{0.0, 0.0};  // m/s, world N/E
  /// Optional depth-indexed scale on the steady velocity: (depth m, scale),
  /// sorted by depth, linearly interpolated, clamped at the ends.
  std::vector<std::pair<double, double>> depth_profile;
  double shielding = 0.9;  // fraction removed inside the station box
  Eigen::Vector3d station_box_min{0.0, -1.0, -1.0};  // station frame
  Eigen::Vector3d station_box_max{1.0, 1.0, 1.0};

  double depth_scale(double depth_m) const {
    if (depth_profile.empty()) return 1.0;
    if (depth_m <= depth_profile.front().first) return depth_profile.front().second;
    if (depth_m >= depth_profile.back().first) return depth_profile.back().second;
    for (size_t i = 1; i < depth_profile.size(); ++i) {
      if (depth_m <= depth_profile[i].first) {
        double t = (depth_m - depth_profile[i - 1].first) /
                   (depth_profile[i].first - depth_profile[i - 1].first);
        return depth_profile[i - 1].second +
               t * (depth_profile[i].second - depth_profile[i - 1].second);
      }
    }
    return depth_profile.back().second;
  }

  /// Water velocity (world NED) at a world position, given the station pose.
  Eigen::Vector3d water_velocity(const Eigen::Vector3d& p_world,
                                 const Pose& t_world_station) const {
    Eigen::Vector3d v(velocity_ne.x(), velocity_ne.y(), 0.0);
    v *= depth_scale(p_world.z());
    Eigen::Vector3d p_station = invert(t_world_station).transform(p_world);
    bool inside = (p_station.array() >= station_box_min.array()).all() &&
                  (p_station.array() <= station_box_max.array()).all();
    if (inside) v *= (1.0 - shielding);
    return v;
  }
};

struct ThrustCommand {
  double surge_n = 0.0;
  double sway_n = 0.0;
  double heave_n = 0.0;
  double yaw_nm = 0.0;
};

inline ThrustCommand clamp(const ThrustCommand& c, const VehicleParams& p) {
  ThrustCommand out;
  out.surge_n = std::clamp(c.surge_n, -p.max_thrust_n.x(), p.max_thrust_n.x());
  out.sway_n = std::clamp(c.sway_n, -p.max_thrust_n.y(), p.max_thrust_n.y());
  out.heave_n = std::clamp(c.heave_n, -p.max_thrust_n.z(), p.max_thrust_n.z());
  out.yaw_nm = std::clamp(c.yaw_nm, -p.max_yaw_moment_nm, p.max_yaw_moment_nm);
  return out;
}

/// Magnetic latch: capture gate at the dock point plus the breakaway
/// threshold for deliberate undocking.
struct LatchState {
  bool latched = false;
  double capture_radius_m = 0.15;
  double capture_heading_tol_rad = 10.0 * M_PI / 180.0;
  double breakaway_thrust_n = 37.5;  // 1.5x max heave thrust by default
  Eigen::Vector3d dock_position{0.55, 0.0, 0.0};  // station frame
  double dock_yaw = 0.0;                          // station frame
};

/// Simulation ground-truth state. Position in world NED; roll/pitch zero.
struct VehicleState {
  double t = 0.0;
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};  // world NED
  double yaw = 0.0;
  Eigen::Vector3d vel_body{Eigen::Vector3d::Zero()};  // u, v, w
  double yaw_rate = 0.0;
  Eigen::Vector3d accel_body{Eigen::Vector3d::Zero()};  // for IMU simulation
  bool latched = false;

  Pose pose_world() const {
    return Pose::from_euler(position, 0.0, 0.0, yaw, FrameId::WORLD_NED);
  }
};

/// True iff the commanded thrust defeats the magnet array.
inline bool breakaway_commanded(const ThrustCommand& cmd, const LatchState& latch) {
  return std::abs(cmd.surge_n) > latch.breakaway_thrust_n ||
         std::abs(cmd.heave_n) > latch.breakaway_thrust_n;
}

/// Capture gate: puck within the capture radius of the dock point with
/// heading aligned. Pose must be in the station frame.
inline bool latch_check(const Pose& vehicle_pose, const LatchState& latch) {
  require_frame(vehicle_pose, FrameId::STATION, "latch_check");
  if ((vehicle_pose.position - latch.dock_position).norm() > latch.capture_radius_m)
    return false;
  return std::abs(wrap_angle(vehicle_pose.yaw() - latch.dock_yaw)) <=
         latch.capture_heading_tol_rad;
}

/// Semi-implicit Euler step of the decoupled 4-DOF model:
///   (m + m_a) vdot = thrust - D_l v_rel - D_q v_rel |v_rel|
/// with v_rel the velocity relative to the (possibly shielded) current.
/// A latched vehicle stays frozen unless breakaway thrust is commanded.
inline VehicleState step(const VehicleState& s, const ThrustCommand& cmd_in,
                         const CurrentField& env, const VehicleParams& params,
                         const LatchState& latch, const Pose& t_world_station,
                         double dt) {
  if (!(dt > 0.0 && dt <= 0.1))
    throw Error(ErrorCode::NONFINITE_STATE, "step: dt outside (0, 0.1]");

  if (s.latched && !breakaway_commanded(cmd_in, latch)) {
    VehicleState held = s;
    held.t += dt;
    held.vel_body.setZero();
    held.yaw_rate = 0.0;
    held.accel_body.setZero();
    return held;
  }

  ThrustCommand cmd = clamp(cmd_in, params);
  double sway_total = cmd.sway_n + params.sway_coupling * cmd.surge_n;
  Eigen::Vector3d thrust(cmd.surge_n, sway_total, cmd.heave_n);

  Eigen::Matrix3d R =
      Eigen::AngleAxisd(s.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  Eigen::Vector3d v_current_body =
      R.transpose() * env.water_velocity(s.position, t_world_station);
  Eigen::Vector3d v_rel = s.vel_body - v_current_body;

  Eigen::Vector3d drag = -(params.linear_damping.array() * v_rel.array() +
                           params.quad_damping.array() * v_rel.array() *
                               v_rel.array().abs())
                              .matrix();
  Eigen::Vector3d m_eff = params.mass_kg + params.added_mass_kg.array();
  Eigen::Vector3d accel = ((thrust + drag).array() / m_eff.array()).matrix();

  double yaw_drag = -params.yaw_linear_damping * s.yaw_rate -
                    params.yaw_quad_damping * s.yaw_rate * std::abs(s.yaw_rate);
  double yaw_accel =
      (cmd.yaw_nm + yaw_drag) / (params.yaw_inertia + params.yaw_added_inertia);

  VehicleState out = s;
  out.latched = false;
  out.t = s.t + dt;
  out.vel_body = s.vel_body + accel * dt;
  out.yaw_rate = s.yaw_rate + yaw_accel * dt;
  out.yaw = wrap_angle(s.yaw + out.yaw_rate * dt);
  out.position = s.position + R * out.vel_body * dt;
  out.accel_body = accel;

  if (!out.position.allFinite() || !out.vel_body.allFinite() ||
      !std::isfinite(out.yaw) || !std::isfinite(out.yaw_rate))
    throw Error(ErrorCode::NONFINITE_STATE, "step: integration diverged");
  return out;
}

/// Snap the vehicle onto the dock pose (magnets align the puck).
inline VehicleState engage_latch(const VehicleState& s, const LatchState& latch,
                                 const Pose& t_world_station) {
  VehicleState out = s;
  out.latched = true;
  out.position = t_world_station.transform(latch.dock_position);
  out.yaw = wrap_angle(t_world_station.yaw() + latch.dock_yaw);
  out.vel_body.setZero();
  out.yaw_rate = 0.0;
  out.accel_body.setZero();
  return out;
}

}  // namespace rovdock
