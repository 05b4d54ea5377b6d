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

#include "rovdock/mission.hpp"

using namespace rovdock;

TEST_CASE("fix window: three fixes inside ten seconds engage homing") {
  FixWindow w;
  w.add(0.0);
  w.add(4.0);
  CHECK_FALSE(w.triggered(3, 10.0));
  w.add(9.0);
  CHECK(w.triggered(3, 10.0));
}

TEST_CASE("fix window: window exceeded does not engage") {
  FixWindow w;
  w.add(0.0);
  w.add(4.0);
  w.add(11.0);
  CHECK_FALSE(w.triggered(3, 10.0));
  // A later burst can still trigger.
  w.add(13.0);
  w.add(15.0);
  CHECK(w.triggered(3, 10.0));
}

TEST_CASE("fix window: endpoints are inclusive") {
  FixWindow w;
  w.add(0.0);
  w.add(4.0);
  w.add(10.0);
  CHECK(w.triggered(3, 10.0));
}

TEST_CASE("homing target applies the -1 m North offset") {
  HomingConfig cfg;
  Waypoint wp = homing_target({100.0, 50.0}, cfg);
  CHECK(wp.position.x() == Catch::Approx(99.0));
  CHECK(wp.position.y() == Catch::Approx(50.0));
  CHECK(wp.heading_rad == 0.0);  // fixed heading toward North

  cfg.offset_north_m = 0.0;
  wp = homing_target({100.0, 50.0}, cfg);
  CHECK(wp.position.x() == Catch::Approx(100.0));
}

namespace {
MissionInputs at(double t) {
  MissionInputs in;
  in.t = t;
  return in;
}
}  // namespace

TEST_CASE("phase graph walks the nominal sequence") {
  AbortRules rules;
  MissionStateMachine sm(MissionPhase::SURFACE_TRANSIT, rules);

  MissionInputs in = at(1.0);
  in.homing_triggered = true;
  CHECK(sm.tick(in).phase == MissionPhase::ACOUSTIC_HOMING);

  in = at(2.0);
  in.in_target_sphere = true;
  CHECK(sm.tick(in).phase == MissionPhase::DESCENT);

  // Marker sighting hands over even above the docking depth.
  in = at(3.0);
  in.marker_detected = true;
  in.depth_reached = false;
  TickResult r = sm.tick(in);
  CHECK(r.phase == MissionPhase::VISUAL_DOCKING);
  CHECK(r.reason == "marker_detected");

  in = at(4.0);
  in.latch_ok = true;
  CHECK(sm.tick(in).phase == MissionPhase::LATCHED);

  in = at(5.0);
  in.undock_commanded = true;
  CHECK(sm.tick(in).phase == MissionPhase::UNDOCK);

  in = at(6.0);
  in.clear_of_funnel = true;
  CHECK(sm.tick(in).phase == MissionPhase::INSPECTION);

  in = at(7.0);
  in.circuit_complete = true;
  CHECK(sm.tick(in).phase == MissionPhase::VISUAL_DOCKING);
}

TEST_CASE("descent exits on depth when no marker appears") {
  AbortRules rules;
  MissionStateMachine sm(MissionPhase::DESCENT, rules);
  MissionInputs in = at(10.0);
  in.depth_reached = true;
  TickResult r = sm.tick(in);
  CHECK(r.phase == MissionPhase::VISUAL_DOCKING);
  CHECK(r.reason == "docking_depth");
}

TEST_CASE("marker loss: one reattempt, then abort") {
  AbortRules rules;
  rules.marker_loss_timeout_s = 10.0;
  rules.max_reattempts = 1;
  MissionStateMachine sm(MissionPhase::VISUAL_DOCKING, rules, 0.0);

  MissionInputs in = at(11.0);
  in.marker_loss_s = 10.5;
  TickResult r = sm.tick(in);
  CHECK(r.phase == MissionPhase::VISUAL_DOCKING);
  CHECK(r.action == MissionAction::START_REATTEMPT);
  sm.note_reattempt_started(11.0);

  in = at(22.0);
  in.marker_loss_s = 10.5;
  r = sm.tick(in);
  CHECK(r.phase == MissionPhase::ABORT);
  CHECK(r.reason == "marker_loss");
}

TEST_CASE("terminal funnel leg suspends the marker-loss abort") {
  AbortRules rules;
  MissionStateMachine sm(MissionPhase::VISUAL_DOCKING, rules, 0.0);
  MissionInputs in = at(20.0);
  in.marker_loss_s = 15.0;
  in.in_terminal_leg = true;
  CHECK(sm.tick(in).phase == MissionPhase::VISUAL_DOCKING);
}

TEST_CASE("phase timeout aborts anywhere but the latched rest state") {
  AbortRules rules;
  rules.phase_timeout_s = 300.0;
  MissionStateMachine sm(MissionPhase::DESCENT, rules, 0.0);
  CHECK(sm.tick(at(301.0)).phase == MissionPhase::ABORT);

  MissionStateMachine latched(MissionPhase::LATCHED, rules, 0.0);
  CHECK(latched.tick(at(1e4)).phase == MissionPhase::LATCHED);
}

TEST_CASE("illegal forced transitions are rejected") {
  AbortRules rules;
  MissionStateMachine sm(MissionPhase::LATCHED, rules, 0.0);
  CHECK_THROWS_AS(sm.force(MissionPhase::INSPECTION, 1.0), Error);
  try {
    sm.force(MissionPhase::DESCENT, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ILLEGAL_TRANSITION);
  }
  CHECK_NOTHROW(sm.force(MissionPhase::UNDOCK, 1.0));
  // Abort is terminal.
  MissionStateMachine aborted(MissionPhase::ABORT, rules, 0.0);
  CHECK_THROWS_AS(aborted.force(MissionPhase::VISUAL_DOCKING, 2.0), Error);
}
