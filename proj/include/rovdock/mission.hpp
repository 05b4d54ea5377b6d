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

#include <deque>
#include <optional>
#include <string>

#include "rovdock/guidance.hpp"

namespace rovdock {

enum class MissionPhase {
  SURFACE_TRANSIT,
  ACOUSTIC_HOMING,
  DESCENT,
  VISUAL_DOCKING,
  LATCHED,
  UNDOCK,
  INSPECTION,
  ABORT
};

inline const char* to_string(MissionPhase p) {
  switch (p) {
    case MissionPhase::SURFACE_TRANSIT: return "SURFACE_TRANSIT";
    case MissionPhase::ACOUSTIC_HOMING: return "ACOUSTIC_HOMING";
    case MissionPhase::DESCENT: return "DESCENT";
    case MissionPhase::VISUAL_DOCKING: return "VISUAL_DOCKING";
    case MissionPhase::LATCHED: return "LATCHED";
    case MissionPhase::UNDOCK: return "UNDOCK";
    case MissionPhase::INSPECTION: return "INSPECTION";
    case MissionPhase::ABORT: return "ABORT";
  }
  return "?";
}

struct HomingConfig {
  int required_fix_count = 3;
  double fix_window_s = 10.0;
  double target_radius_m = 1.0;
  double offset_north_m = -1.0;
  double offset_east_m = 0.0;
  double docking_depth_m = 89.0;
  double descent_heading_rad = 0.0;  // fixed heading toward North
  double descent_rate_mps = 0.4;
  double transit_speed_mps = 0.35;
  double surface_depth_m = 0.5;
};

struct AbortRules {
  double marker_loss_timeout_s = 10.0;
  double phase_timeout_s = 300.0;
  int max_reattempts = 1;
};

/// Sliding-window trigger: engaged once `count` valid fixes fall inside any
/// window of `window_s` seconds (window endpoints inclusive).
class FixWindow {
 public:
  void add(double t) { times_.push_back(t); }

  bool triggered(int count, double window_s) const {
    if (count < 1 || static_cast<int>(times_.size()) < count) return false;
    for (size_t i = 0; i + count <= times_.size(); ++i)
      if (times_[i + count - 1] - times_[i] <= window_s + 1e-9) return true;
    return false;
  }

  size_t size() const { return times_.size(); }
  void clear() { times_.clear(); }
  const std::deque<double>& times() const { return times_; }

 private:
  std::deque<double> times_;
};

/// The descent target: USBL coordinate center plus the intentional offset
/// that puts the station in the forward field of view at a North heading.
inline Waypoint homing_target(const Eigen::Vector2d& usbl_center_ne,
                              const HomingConfig& cfg) {
  Waypoint wp;
  wp.frame = FrameId::WORLD_NED;
  wp.position = {usbl_center_ne.x() + cfg.offset_north_m,
                 usbl_center_ne.y() + cfg.offset_east_m, cfg.surface_depth_m};
  wp.heading_rad = cfg.descent_heading_rad;
  wp.accept_radius_m = cfg.target_radius_m;
  wp.heading_tol_rad = 5.0 * M_PI / 180.0;
  wp.cruise_speed_mps = cfg.transit_speed_mps;
  wp.label = "homing_target";
  return wp;
}

enum class MissionAction { NONE, START_REATTEMPT };

/// Everything the state machine looks at on one tick; the runner computes
/// these predicates from truth, estimate and sensor streams.
struct MissionInputs {
  double t = 0.0;
  bool homing_triggered = false;  // fix window satisfied
  bool in_target_sphere = false;  // estimate inside descent target sphere
  bool depth_reached = false;
  bool marker_detected = false;
  double marker_loss_s = 0.0;  // time since last marker fix in this phase
  bool in_terminal_leg = false;  // inside the funnel; markers are behind the camera
  bool latch_ok = false;
  bool undock_commanded = false;
  bool clear_of_funnel = false;
  bool circuit_complete = false;
};

struct TickResult {
  MissionPhase phase;
  MissionAction action = MissionAction::NONE;
  std::string reason;
};

/// Phase graph with abort rules. Transitions happen only along legal
/// edges; forcing anything else raises ILLEGAL_TRANSITION.
class MissionStateMachine {
 public:
  MissionStateMachine(MissionPhase start, const AbortRules& rules, double t0 = 0.0)
      : phase_(start), rules_(rules), phase_entry_t_(t0),
        reattempts_left_(rules.max_reattempts) {}

  MissionPhase phase() const { return phase_; }
  double phase_entry_time() const { return phase_entry_t_; }
  int reattempts_left() const { return reattempts_left_; }

  static bool legal(MissionPhase from, MissionPhase to) {
    if (to == MissionPhase::ABORT) return from != MissionPhase::ABORT;
    switch (from) {
      case MissionPhase::SURFACE_TRANSIT: return to == MissionPhase::ACOUSTIC_HOMING;
      case MissionPhase::ACOUSTIC_HOMING: return to == MissionPhase::DESCENT;
      case MissionPhase::DESCENT: return to == MissionPhase::VISUAL_DOCKING;
      case MissionPhase::VISUAL_DOCKING: return to == MissionPhase::LATCHED;
      case MissionPhase::LATCHED: return to == MissionPhase::UNDOCK;
      case MissionPhase::UNDOCK: return to == MissionPhase::INSPECTION;
      case MissionPhase::INSPECTION: return to == MissionPhase::VISUAL_DOCKING;
      case MissionPhase::ABORT: return false;
    }
    return false;
  }

  /// External phase override (tests, operator command).
  void force(MissionPhase to, double t) {
    if (!legal(phase_, to))
      throw Error(ErrorCode::ILLEGAL_TRANSITION,
                  std::string(to_string(phase_)) + " -> " + to_string(to));
    enter(to, t);
  }

  TickResult tick(const MissionInputs& in) {
    TickResult out{phase_};
    double elapsed = in.t - phase_entry_t_;

    // Phase duration guard applies everywhere except the latched rest state.
    if (phase_ != MissionPhase::LATCHED && phase_ != MissionPhase::ABORT &&
        elapsed > rules_.phase_timeout_s) {
      enter(MissionPhase::ABORT, in.t);
      return {phase_, MissionAction::NONE, "phase_timeout"};
    }

    switch (phase_) {
      case MissionPhase::SURFACE_TRANSIT:
        if (in.homing_triggered) {
          enter(MissionPhase::ACOUSTIC_HOMING, in.t);
          out = {phase_, MissionAction::NONE, "fix_window"};
        }
        break;
      case MissionPhase::ACOUSTIC_HOMING:
        if (in.in_target_sphere) {
          enter(MissionPhase::DESCENT, in.t);
          out = {phase_, MissionAction::NONE, "target_sphere"};
        }
        break;
      case MissionPhase::DESCENT:
        if (in.marker_detected || in.depth_reached) {
          enter(MissionPhase::VISUAL_DOCKING, in.t);
          out = {phase_, MissionAction::NONE,
                 in.marker_detected ? "marker_detected" : "docking_depth"};
        }
        break;
      case MissionPhase::VISUAL_DOCKING:
        if (in.latch_ok) {
          enter(MissionPhase::LATCHED, in.t);
          out = {phase_, MissionAction::NONE, "latched"};
          break;
        }
        if (!in.in_terminal_leg && in.marker_loss_s > rules_.marker_loss_timeout_s) {
          if (reattempts_left_ > 0) {
            --reattempts_left_;
            out = {phase_, MissionAction::START_REATTEMPT, "marker_loss_reattempt"};
          } else {
            enter(MissionPhase::ABORT, in.t);
            out = {phase_, MissionAction::NONE, "marker_loss"};
          }
        }
        break;
      case MissionPhase::LATCHED:
        if (in.undock_commanded) {
          enter(MissionPhase::UNDOCK, in.t);
          out = {phase_, MissionAction::NONE, "undock_command"};
        }
        break;
      case MissionPhase::UNDOCK:
        if (in.clear_of_funnel) {
          enter(MissionPhase::INSPECTION, in.t);
          out = {phase_, MissionAction::NONE, "clear_of_funnel"};
        }
        break;
      case MissionPhase::INSPECTION:
        if (in.circuit_complete) {
          enter(MissionPhase::VISUAL_DOCKING, in.t);
          out = {phase_, MissionAction::NONE, "circuit_complete"};
        }
        break;
      case MissionPhase::ABORT:
        break;
    }
    return out;
  }

  /// Restarts the marker-loss clock after a reattempt begins.
  void note_reattempt_started(double t) { phase_entry_t_ = t; }

 private:
  void enter(MissionPhase p, double t) {
    phase_ = p;
    phase_entry_t_ = t;
  }

  MissionPhase phase_;
  AbortRules rules_;
  double phase_entry_t_;
  int reattempts_left_;
};

}  // namespace rovdock
