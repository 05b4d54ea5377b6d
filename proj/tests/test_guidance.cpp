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

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "rovdock/guidance.hpp"

using namespace rovdock;

namespace {
const std::string kLayoutPath =
    std::string(ROVDOCK_REPO_DIR) + "/configs/layout_deep_default.json";

Pose pose_at(const Eigen::Vector3d& p, double yaw, FrameId f = FrameId::TAG_STAR) {
  return Pose::from_euler(p, 0, 0, yaw, f);
}
}  // namespace

TEST_CASE("waypoint gate: heading tolerance is +-5 degrees") {
  Waypoint wp;
  wp.position = {1, 2, 3};
  wp.accept_radius_m = 0.25;
  CHECK(waypoint_reached(pose_at(wp.position, 4.0 * M_PI / 180.0), wp));
  CHECK_FALSE(waypoint_reached(pose_at(wp.position, 6.0 * M_PI / 180.0), wp));
  // Closed sphere: the boundary counts as reached.
  Pose boundary = pose_at(wp.position + Eigen::Vector3d(0.25, 0, 0), 0.0);
  CHECK(waypoint_reached(boundary, wp));
}

TEST_CASE("waypoint gate: frame mismatch is an error") {
  Waypoint wp;
  CHECK_THROWS_AS(waypoint_reached(pose_at({0, 0, 0}, 0, FrameId::WORLD_NED), wp), Error);
}

TEST_CASE("waypoint gate agrees with a brute-force recomputation over 1e4 poses") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Waypoint wp;
  wp.position = {0.3, -0.2, 0.1};
  int disagreements = 0;
  for (int i = 0; i < 10000; ++i) {
    Eigen::Vector3d p(0.3 + 0.4 * u(rng), -0.2 + 0.4 * u(rng), 0.1 + 0.4 * u(rng));
    double yaw = 0.3 * u(rng);
    bool got = waypoint_reached(pose_at(p, yaw), wp);
    // Independent recomputation from the definition.
    double dx = p.x() - wp.position.x(), dy = p.y() - wp.position.y(),
           dz = p.z() - wp.position.z();
    double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
    double herr = std::fmod(std::abs(yaw - wp.heading_rad), 2 * M_PI);
    if (herr > M_PI) herr = 2 * M_PI - herr;
    bool expect = dist <= wp.accept_radius_m && herr <= wp.heading_tol_rad;
    if (got != expect) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("waypoint gate is invariant under rigid transforms") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    Waypoint wp;
    wp.position = {u(rng), u(rng), u(rng)};
    wp.heading_rad = M_PI * u(rng);
    Pose est = pose_at({wp.position.x() + 0.2 * u(rng), wp.position.y() + 0.2 * u(rng),
                        wp.position.z() + 0.2 * u(rng)},
                       wrap_angle(wp.heading_rad + 0.1 * u(rng)));
    bool before = waypoint_reached(est, wp);

    // Apply the same yaw-plus-translation transform to both.
    Pose rigid = Pose::from_euler({u(rng), u(rng), u(rng)}, 0, 0, M_PI * u(rng),
                                  FrameId::TAG_STAR);
    Pose est2 = compose(rigid, est);
    est2.frame = FrameId::TAG_STAR;
    Waypoint wp2 = wp;
    wp2.position = rigid.transform(wp.position);
    wp2.heading_rad = wrap_angle(wp.heading_rad + rigid.yaw());
    CHECK(waypoint_reached(est2, wp2) == before);
  }
}

TEST_CASE("initial waypoint selection: nearest, with right-loop tie-break") {
  MarkerLayout m = load_layout(kLayoutPath);
  auto [left, right] = build_loops(m, 1.5);

  // 2.5 m right of the funnel: the right loop's first waypoint wins.
  Pose est = pose_at({0.5 - m.t_station_tagstar().position.x(), 2.5, 0.55}, -M_PI / 2);
  WaypointSelection sel = select_initial_waypoint(est, left, right);
  CHECK(sel.kind == PathKind::RIGHT_LOOP);
  CHECK(sel.index == 0);

  // Equidistant to both lateral starts: right wins by tie-break.
  Pose mid = pose_at({0.5, 0.0, 0.55}, 0.0);
  CHECK((mid.position - left.waypoints[0].position).norm() ==
        Catch::Approx((mid.position - right.waypoints[0].position).norm()));
  CHECK(select_initial_waypoint(mid, left, right).kind == PathKind::RIGHT_LOOP);

  // Already at the final pre-dock waypoint: that waypoint is selected.
  Pose at_dock = pose_at(right.waypoints.back().position, 0.0);
  sel = select_initial_waypoint(at_dock, left, right);
  CHECK(sel.index == right.waypoints.size() - 1);
}

TEST_CASE("initial waypoint selection matches a brute-force scan") {
  MarkerLayout m = load_layout(kLayoutPath);
  auto [left, right] = build_loops(m, 1.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    Pose est = pose_at({u(rng), u(rng), 0.3 * u(rng)}, 0.0);
    WaypointSelection sel = select_initial_waypoint(est, left, right);
    double best = 1e18;
    for (const auto& path : {left, right})
      for (const auto& wp : path.waypoints)
        best = std::min(best, (est.position - wp.position).norm());
    const WaypointPath& chosen = sel.kind == PathKind::LEFT_LOOP ? left : right;
    CHECK((est.position - chosen.waypoints[sel.index].position).norm() ==
          Catch::Approx(best));
  }
}

TEST_CASE("controller: zero error commands zero thrust") {
  EkfState15 est;
  Waypoint wp;
  ControllerGains g;
  PidState pid;
  ThrustCommand cmd = control(est, wp, g, pid, 0.05);
  CHECK(cmd.surge_n == 0.0);
  CHECK(cmd.sway_n == 0.0);
  CHECK(cmd.heave_n == 0.0);
  CHECK(cmd.yaw_nm == 0.0);
}

TEST_CASE("controller: target ahead commands surge, target to port commands sway") {
  EkfState15 est;
  ControllerGains g;
  PidState pid;

  Waypoint ahead;
  ahead.position = {1.0, 0, 0};
  ThrustCommand cmd = control(est, ahead, g, pid, 0.05);
  CHECK(cmd.surge_n > 1.0);
  CHECK(std::abs(cmd.sway_n) < 1e-9);
  CHECK(std::abs(cmd.yaw_nm) < 1e-9);

  pid.reset();
  Waypoint port;
  port.position = {0, -1.0, 0};  // one meter to port, same heading
  cmd = control(est, port, g, pid, 0.05);
  CHECK(cmd.sway_n < -1.0);
  CHECK(std::abs(cmd.surge_n) < std::abs(cmd.sway_n) / 5);
  CHECK(std::abs(cmd.yaw_nm) < 1e-9);  // no turn-first behavior
}

TEST_CASE("build_loops: geometry, sharing, stand-off monotonicity") {
  MarkerLayout m = load_layout(kLayoutPath);
  auto [left, right] = build_loops(m, 1.5);
  REQUIRE(right.waypoints.size() == 5);
  REQUIRE(left.waypoints.size() == 5);

  // Default stand-off puts the right start about 2.5 m right of the funnel.
  double funnel_y = -m.t_station_tagstar().position.y();
  CHECK(std::abs(right.waypoints[0].position.y() - (funnel_y + 2.5)) < 1e-9);

  // Both loops share frontal alignment, entry and dock waypoints.
  for (size_t i = 2; i < 5; ++i) {
    CHECK(left.waypoints[i].position == right.waypoints[i].position);
    CHECK(left.waypoints[i].heading_rad == right.waypoints[i].heading_rad);
  }

  auto [left2, right2] = build_loops(m, 2.0);
  CHECK(right2.waypoints[1].position.x() < right.waypoints[1].position.x());
  CHECK(right2.waypoints[1].position.y() > right.waypoints[1].position.y());
  CHECK(left2.waypoints[1].position.y() < left.waypoints[1].position.y());

  // No overlapping acceptance spheres along either loop.
  for (const auto& path : {left, right, left2, right2})
    for (size_t i = 1; i < path.waypoints.size(); ++i) {
      double gap = (path.waypoints[i].position - path.waypoints[i - 1].position).norm();
      CHECK(gap > path.waypoints[i].accept_radius_m +
                      path.waypoints[i - 1].accept_radius_m);
    }

  CHECK_THROWS_AS(build_loops(m, 0.3), Error);
}

TEST_CASE("closed loop reaches every waypoint of a loop in bounded time") {
  MarkerLayout m = load_layout(kLayoutPath);
  auto [left, right] = build_loops(m, 1.5);
  VehicleParams vp;
  CurrentField env;
  LatchState latch;
  ControllerGains gains;
  Pose station = Pose::identity(FrameId::WORLD_NED);
  Pose t_st_ts = m.t_station_tagstar();

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    const WaypointPath& path = trial % 2 ? left : right;
    // Start within 3 m of the first waypoint, arbitrary heading.
    VehicleState truth;
    Eigen::Vector3d start_ts =
        path.waypoints[0].position + Eigen::Vector3d(2.0 * u(rng), 2.0 * u(rng), 0.2 * u(rng));
    truth.position = t_st_ts.position + start_ts;  // station==world here
    truth.yaw = M_PI * u(rng);

    PidState pid;
    size_t idx = 0;
    double t = 0.0, leg_start = 0.0;
    while (idx < path.waypoints.size() && t < 400.0) {
      // Perfect state feedback: the guidance property, not the filter's.
      EkfState15 est;
      est.x.segment<3>(SX) = truth.position - t_st_ts.position;
      est.x(SYAW) = truth.yaw;
      est.x.segment<3>(SU) = truth.vel_body;
      est.x(SR) = truth.yaw_rate;
      est.x.segment<3>(SAX) = truth.accel_body;
      ThrustCommand cmd = control(est, path.waypoints[idx], gains, pid, 0.05);
      truth = step(truth, cmd, env, vp, latch, station, 0.05);
      t += 0.05;
      if (waypoint_reached(est.pose(FrameId::TAG_STAR), path.waypoints[idx])) {
        CHECK(t - leg_start < 60.0);
        leg_start = t;
        ++idx;
      }
    }
    CHECK(idx == path.waypoints.size());
  }
}

TEST_CASE("inspection circuits: timing, coverage and dock-vicinity bookends") {
  MarkerLayout m = load_layout(kLayoutPath);
  double cruise = 0.15;
  auto [left, right] = build_inspection(m, 1.5, cruise);

  for (const auto& path : {left, right}) {
    double length = 0.0;
    for (size_t i = 1; i < path.waypoints.size(); ++i)
      length += (path.waypoints[i].position - path.waypoints[i - 1].position).norm();
    double duration = length / cruise;
    CHECK(duration > 110.0);
    CHECK(duration < 150.0);

    // First and last waypoints sit in the dock vicinity (frontal align).
    auto [l2, r2] = build_loops(m, 1.5);
    Eigen::Vector3d align = r2.waypoints[2].position;
    CHECK((path.waypoints.front().position - align).norm() < 0.5);
    CHECK((path.waypoints.back().position - align).norm() < 0.5);
  }

  // Every station face normal within 45 degrees of some waypoint camera axis.
  auto check_face = [&](Face f, const WaypointPath& a, const WaypointPath& b) {
    Eigen::Vector3d inward = -face_normal(f);
    double best = M_PI;
    for (const auto& path : {a, b})
      for (const auto& wp : path.waypoints) {
        Eigen::Vector3d axis(std::cos(wp.heading_rad), std::sin(wp.heading_rad), 0);
        best = std::min(best, std::acos(std::clamp(axis.dot(inward), -1.0, 1.0)));
      }
    return best;
  };
  for (Face f : {Face::FRONT, Face::LEFT, Face::RIGHT, Face::REAR, Face::FUNNEL_INTERIOR})
    CHECK(check_face(f, left, right) < 45.0 * M_PI / 180.0);
}
