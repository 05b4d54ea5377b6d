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

#include <string>
#include <vector>

#include "rovdock/estimation.hpp"
#include "rovdock/layout.hpp"
#include "rovdock/vehicle.hpp"

namespace rovdock {

/// A waypoint: position, desired heading, and the acceptance sphere.
/// The desired heading is a per-waypoint constant, not bearing-to-target;
/// the vehicle crabs sideways with the camera kept on the station.
struct Waypoint {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};
  FrameId frame = FrameId::TAG_STAR;
  double heading_rad = 0.0;
  double accept_radius_m = 0.25;
  double heading_tol_rad = 5.0 * M_PI / 180.0;
  double cruise_speed_mps = 0.10;
  std::string label;
};

enum class PathKind { LEFT_LOOP, RIGHT_LOOP, INSPECTION_LEFT, INSPECTION_RIGHT, HOMING_DESCENT };

inline const char* to_string(PathKind k) {
  switch (k) {
    case PathKind::LEFT_LOOP: return "LEFT_LOOP";
    case PathKind::RIGHT_LOOP: return "RIGHT_LOOP";
    case PathKind::INSPECTION_LEFT: return "INSPECTION_LEFT";
    case PathKind::INSPECTION_RIGHT: return "INSPECTION_RIGHT";
    case PathKind::HOMING_DESCENT: return "HOMING_DESCENT";
  }
  return "?";
}

struct WaypointPath {
  std::vector<Waypoint> waypoints;
  PathKind kind = PathKind::RIGHT_LOOP;
  double stand_off_m = 1.5;
};

/// Closed acceptance sphere plus the +-5 degree heading gate.
inline bool waypoint_reached(const Pose& estimate, const Waypoint& wp) {
  if (estimate.frame != wp.frame)
    throw Error(ErrorCode::FRAME_MISMATCH, "waypoint_reached: estimate vs waypoint");
  if ((estimate.position - wp.position).norm() > wp.accept_radius_m) return false;
  return std::abs(wrap_angle(estimate.yaw() - wp.heading_rad)) <= wp.heading_tol_rad;
}

struct WaypointSelection {
  PathKind kind;
  size_t index;
};

/// Picks the globally closest waypoint across both loops as the initial
/// target. Ties prefer the right loop, then the lower index.
inline WaypointSelection select_initial_waypoint(const Pose& estimate,
                                                 const WaypointPath& left,
                                                 const WaypointPath& right) {
  WaypointSelection best{right.kind, 0};
  double best_d = std::numeric_limits<double>::infinity();
  auto scan = [&](const WaypointPath& path) {
    for (size_t i = 0; i < path.waypoints.size(); ++i) {
      double d = (estimate.position - path.waypoints[i].position).norm();
      if (d < best_d - 1e-12) {
        best_d = d;
        best = {path.kind, i};
      }
    }
  };
  scan(right);  // scanned first so ties keep the right loop
  scan(left);
  return best;
}

/// Cascade gains: position error -> velocity reference (clamped at the
/// waypoint cruise speed), velocity error -> thrust via PID.
struct ControllerGains {
  double pos_p = 0.7;  // (m/s) per m
  Eigen::Vector3d vel_p{45.0, 45.0, 45.0};
  Eigen::Vector3d vel_i{10.0, 10.0, 10.0};
  Eigen::Vector3d vel_d{6.0, 6.0, 6.0};
  double integral_clamp_n = 8.0;
  Eigen::Vector3d thrust_clamp_n{20.0, 20.0, 20.0};
  double yaw_pos_p = 1.2;        // rad/s per rad
  double yaw_rate_limit = 0.15;  // rad/s
  double yaw_rate_p = 10.0;      // N m per rad/s
  double yaw_clamp_nm = 3.0;

  bool valid() const {
    return pos_p > 0 && (vel_p.array() > 0).all() && integral_clamp_n > 0 &&
           (thrust_clamp_n.array() > 0).all() && yaw_clamp_nm > 0;
  }
};

/// Integrator state, owned by the mission runner (single writer).
struct PidState {
  Eigen::Vector3d vel_integral{Eigen::Vector3d::Zero()};
  void reset() { vel_integral.setZero(); }
};

/// Per-axis feedback from the current estimate to a thrust command.
/// Position error is rotated into the body frame; no turn-first behavior,
/// the heading loop runs independently toward the waypoint heading.
inline ThrustCommand control(const EkfState15& estimate, const Waypoint& target,
                             const ControllerGains& g, PidState& pid, double dt) {
  Eigen::Vector3d e_nav = target.position - estimate.position();
  Eigen::Matrix3d rz =
      Eigen::AngleAxisd(estimate.yaw(), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  Eigen::Vector3d e_body = rz.transpose() * e_nav;

  Eigen::Vector3d v_cmd = g.pos_p * e_body;
  double h_norm = v_cmd.head<2>().norm();
  if (h_norm > target.cruise_speed_mps)
    v_cmd.head<2>() *= target.cruise_speed_mps / h_norm;
  v_cmd.z() = std::clamp(v_cmd.z(), -target.cruise_speed_mps, target.cruise_speed_mps);

  Eigen::Vector3d e_vel = v_cmd - estimate.vel_body();
  pid.vel_integral += e_vel * dt;
  pid.vel_integral = pid.vel_integral.cwiseMax(-g.integral_clamp_n / g.vel_i.maxCoeff())
                         .cwiseMin(g.integral_clamp_n / g.vel_i.maxCoeff());

  Eigen::Vector3d force = g.vel_p.cwiseProduct(e_vel) +
                          g.vel_i.cwiseProduct(pid.vel_integral) -
                          g.vel_d.cwiseProduct(estimate.accel_body());
  force = force.cwiseMax(-g.thrust_clamp_n).cwiseMin(g.thrust_clamp_n);

  double yaw_err = wrap_angle(target.heading_rad - estimate.yaw());
  double r_cmd = std::clamp(g.yaw_pos_p * yaw_err, -g.yaw_rate_limit, g.yaw_rate_limit);
  double moment =
      std::clamp(g.yaw_rate_p * (r_cmd - estimate.x(SR)), -g.yaw_clamp_nm, g.yaw_clamp_nm);

  ThrustCommand cmd;
  cmd.surge_n = force.x();
  cmd.sway_n = force.y();
  cmd.heave_n = force.z();
  cmd.yaw_nm = moment;
  return cmd;
}

namespace guidance_detail {

inline Waypoint make_wp(const Eigen::Vector3d& pos_station, double heading, double radius,
                        double cruise, const std::string& label,
                        const Pose& t_station_tagstar) {
  Waypoint wp;
  wp.position = pos_station - t_station_tagstar.position;  // tag* frame, axes shared
  wp.frame = FrameId::TAG_STAR;
  wp.heading_rad = heading;
  wp.accept_radius_m = radius;
  wp.cruise_speed_mps = cruise;
  wp.label = label;
  return wp;
}

inline void check_clear_of_station(const WaypointPath& path, const StationGeometry& st,
                                   const Pose& t_station_tagstar) {
  for (const auto& wp : path.waypoints) {
    Eigen::Vector3d p_station = wp.position + t_station_tagstar.position;
    // The funnel-entry and dock waypoints legitimately sit in the entry slot.
    bool in_entry_slot =
        std::abs(p_station.y() - st.entry_center.y()) <= st.entry_width_m / 2 &&
        std::abs(p_station.z() - st.entry_center.z()) <= st.entry_height_m / 2;
    if (st.inside_box(p_station, -0.05) && !in_entry_slot)
      throw Error(ErrorCode::GEOMETRY_ERROR,
                  "waypoint '" + wp.label + "' inside station volume");
  }
}

}  // namespace guidance_detail

struct LoopSpeeds {
  double transit = 0.10;
  double approach = 0.08;
  double entry = 0.033;
  double dock = 0.026;
  /// Lateral/approach legs keep constant duration when the stand-off is
  /// retuned (the field campaign reported consistent docking times across
  /// stand-off configurations), so leg speeds scale with stand-off.
  double reference_stand_off = 1.5;
};

/// Two U-shaped approach loops: lateral start, corner, shared frontal
/// alignment, funnel entry, dock point. Lateral legs keep `stand_off`
/// clearance from the station faces; headings keep the camera on the
/// station so the vehicle crabs through the lateral legs.
inline std::pair<WaypointPath, WaypointPath> build_loops(const MarkerLayout& layout,
                                                         double stand_off_m,
                                                         const LoopSpeeds& speeds = {}) {
  if (stand_off_m < 0.5)
    throw Error(ErrorCode::GEOMETRY_ERROR, "stand_off below 0.5 m");
  const StationGeometry& st = layout.station;
  Pose t_st_ts = layout.t_station_tagstar();
  using guidance_detail::make_wp;

  double k = stand_off_m / speeds.reference_stand_off;
  double transit = speeds.transit * k;
  double approach = speeds.approach * k;

  double front_x = st.box_min.x() - stand_off_m;
  double right_y = st.box_max.y() + stand_off_m;
  double left_y = st.box_min.y() - stand_off_m;
  double mid_x = 0.5 * (st.box_min.x() + st.box_max.x());
  double entry_z = st.entry_center.z();
  double psi_front = 0.0;           // facing into the station
  double psi_from_right = -M_PI / 2;  // facing the right face
  double psi_from_left = M_PI / 2;

  Waypoint align = make_wp({front_x, st.entry_center.y(), entry_z}, psi_front, 0.25,
                           approach, "frontal_align", t_st_ts);
  Waypoint entry = make_wp({st.box_min.x() - 0.15, st.entry_center.y(), entry_z},
                           psi_front, 0.10, speeds.entry, "funnel_entry", t_st_ts);
  Waypoint dock = make_wp(st.dock_point, st.dock_yaw_rad, 0.10, speeds.dock, "dock",
                          t_st_ts);

  WaypointPath right;
  right.kind = PathKind::RIGHT_LOOP;
  right.stand_off_m = stand_off_m;
  right.waypoints = {
      make_wp({mid_x, right_y, entry_z}, psi_from_right, 0.30, transit,
              "right_lateral", t_st_ts),
      make_wp({front_x, right_y, entry_z}, psi_from_right, 0.15, transit,
              "right_corner", t_st_ts),
      align, entry, dock};

  WaypointPath left;
  left.kind = PathKind::LEFT_LOOP;
  left.stand_off_m = stand_off_m;
  left.waypoints = {
      make_wp({mid_x, left_y, entry_z}, psi_from_left, 0.30, transit,
              "left_lateral", t_st_ts),
      make_wp({front_x, left_y, entry_z}, psi_from_left, 0.15, transit,
              "left_corner", t_st_ts),
      align, entry, dock};

  guidance_detail::check_clear_of_station(right, st, t_st_ts);
  guidance_detail::check_clear_of_station(left, st, t_st_ts);
  return {left, right};
}

/// Inspection circuits: out of the dock vicinity, around one side to the
/// rear centerline and back, headings facing the station for camera
/// coverage. Right circuit covers the right and rear faces, left mirrors.
inline std::pair<WaypointPath, WaypointPath> build_inspection(const MarkerLayout& layout,
                                                              double stand_off_m = 1.5,
                                                              double cruise_mps = 0.15) {
  const StationGeometry& st = layout.station;
  Pose t_st_ts = layout.t_station_tagstar();
  using guidance_detail::make_wp;

  double front_x = st.box_min.x() - stand_off_m;
  double rear_x = st.box_max.x() + stand_off_m;
  double z = st.entry_center.z();
  Eigen::Vector3d center(0.5 * (st.box_min.x() + st.box_max.x()),
                         0.5 * (st.box_min.y() + st.box_max.y()), z);

  auto facing_center = [&](const Eigen::Vector3d& p) {
    return std::atan2(center.y() - p.y(), center.x() - p.x());
  };

  auto circuit = [&](double side_y, PathKind kind, const std::string& prefix) {
    WaypointPath path;
    path.kind = kind;
    path.stand_off_m = stand_off_m;
    Eigen::Vector3d home(front_x, st.entry_center.y(), z);
    Eigen::Vector3d fc(front_x, side_y, z);
    Eigen::Vector3d rc(rear_x, side_y, z);
    Eigen::Vector3d rm(rear_x, st.entry_center.y(), z);
    path.waypoints = {
        make_wp(home, 0.0, 0.30, cruise_mps, prefix + "_out", t_st_ts),
        make_wp(fc, facing_center(fc), 0.30, cruise_mps, prefix + "_front_corner",
                t_st_ts),
        make_wp(rc, facing_center(rc), 0.30, cruise_mps, prefix + "_rear_corner",
                t_st_ts),
        make_wp(rm, facing_center(rm), 0.30, cruise_mps, prefix + "_rear_center",
                t_st_ts),
        make_wp(rc, facing_center(rc), 0.30, cruise_mps, prefix + "_rear_corner_back",
                t_st_ts),
        make_wp(fc, facing_center(fc), 0.30, cruise_mps, prefix + "_front_corner_back",
                t_st_ts),
        make_wp(home, 0.0, 0.30, cruise_mps, prefix + "_home", t_st_ts)};
    guidance_detail::check_clear_of_station(path, st, t_st_ts);
    return path;
  };

  WaypointPath right = circuit(st.box_max.y() + stand_off_m, PathKind::INSPECTION_RIGHT,
                               "insp_right");
  WaypointPath left =
      circuit(st.box_min.y() - stand_off_m, PathKind::INSPECTION_LEFT, "insp_left");
  return {left, right};
}

}  // namespace rovdock
