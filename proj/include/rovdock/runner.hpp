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

#include "rovdock/logging.hpp"
#include "rovdock/scenario.hpp"

namespace rovdock {

struct PhaseEvent {
  double t;
  MissionPhase from;
  MissionPhase to;
  std::string reason;
};

struct TrialResult {
  bool success = false;
  double duration_s = 0.0;  // first VISUAL_DOCKING entry to first latch
  std::optional<std::string> abort_reason;
  std::vector<PhaseEvent> timeline;
  double final_pos_err_m = 0.0;
  int waypoints_reached = 0;
  uint64_t seed = 0;
  Approach approach = Approach::FRONT;
  double nees_mean = 0.0;  // pose-block NEES of the docking filter, time-avg
  std::vector<double> inspection_leg_s;
  int redocks = 0;
  bool inspection_complete = false;
  std::vector<Face> faces_observed;  // faces with at least one tag detected
};

/// Executes one seeded trial of the full closed loop: truth propagation,
/// sensor sampling, both filters, the mission state machine and guidance.
/// Deterministic: every random draw flows from the single per-trial RNG in
/// a fixed order (schedule, start jitter, then per-step sensor draws).
class MissionRunner {
 public:
  MissionRunner(const ScenarioConfig& sc, const MarkerLayout& layout, uint64_t seed,
                JsonlLogger* log = nullptr)
      : sc_(sc), layout_(layout), seed_(seed), rng_(seed), log_(log),
        t_world_station_(sc.station_pose_world()),
        t_station_tagstar_(layout.t_station_tagstar()),
        ekf_docking_(sc.ekf_docking), ekf_homing_(sc.ekf_homing),
        sm_(sc.start.mode == StartMode::SURFACE ? MissionPhase::SURFACE_TRANSIT
                                                : MissionPhase::VISUAL_DOCKING,
            sc.abort) {
    t_world_tagstar_ = compose(t_world_station_, t_station_tagstar_);
    latch_ = sc.latch;
    latch_.dock_position = layout.station.dock_point;
    latch_.dock_yaw = layout.station.dock_yaw_rad;

    fish_ = draw_fish_schedule(sc.occlusions, sc.sim.duration_cap_s, rng_);
    auto [left, right] = build_loops(layout, sc.stand_off_m, sc.speeds);
    loop_left_ = std::move(left);
    loop_right_ = std::move(right);
    auto [ileft, iright] =
        build_inspection(layout, sc.stand_off_m, sc.inspection_cruise_mps);
    insp_left_ = std::move(ileft);
    insp_right_ = std::move(iright);

    init_truth_and_filters();
  }

  TrialResult run() {
    const double dt = sc_.sim.dt_s;
    const int steps = static_cast<int>(sc_.sim.duration_cap_s / dt);
    const int sensor_div = std::max(1, static_cast<int>(std::round(0.2 / dt)));  // 5 Hz
    const int usbl_div = std::max(1, static_cast<int>(std::round(sc_.usbl.ping_period_s / dt)));

    log_meta();
    if (sm_.phase() == MissionPhase::VISUAL_DOCKING)
      on_phase_change(0.0, sm_.phase(), MissionPhase::VISUAL_DOCKING, "start");
    else
      log_phase(0.0, sm_.phase(), sm_.phase(), "start");

    for (int k = 1; k <= steps; ++k) {
      double t = k * dt;
      ActiveOcclusions occ = ActiveOcclusions::at(fish_, layout_, t);

      // --- sensors (fixed draw order) ---
      drift_.step(sc_.sensor_noise, dt, rng_);
      std::optional<UsblFix> fix;
      if (k % usbl_div == 0)
        fix = sample_usbl(truth_.position, t_world_station_.position, sc_.usbl, t, rng_);
      ImuMeasurement imu = sample_imu(truth_, sc_.sensor_noise, drift_, true, rng_);
      std::optional<DvlMeasurement> dvl;
      std::optional<DepthMeasurement> depth;
      std::vector<MarkerDetection> detections;
      if (k % sensor_div == 0) {
        dvl = sample_dvl(truth_, sc_.sensor_noise, rng_);
        depth = sample_depth(truth_, sc_.sensor_noise, rng_);
        Pose cam_pose = camera_pose_station(truth_.pose_world(), t_world_station_,
                                            sc_.camera);
        detections = detect_markers(cam_pose, layout_, sc_.camera, occ,
                                    sc_.marker_noise, rng_);
        for (const auto& d : detections) note_face_observed(d.tag_id);
        last_camera_count_ = static_cast<int>(detections.size());
      }

      if (sc_.sim.log_measurements && log_ && log_->enabled()) {
        if (fix)
          log_->write({{"k", "meas"}, {"t", t}, {"s", "usbl"},
                       {"ne", {fix->north_offset_m, fix->east_offset_m}}});
        if (dvl)
          log_->write({{"k", "meas"}, {"t", t}, {"s", "dvl"},
                       {"v", {dvl->vel_body.x(), dvl->vel_body.y(), dvl->vel_body.z()}}});
        if (depth) log_->write({{"k", "meas"}, {"t", t}, {"s", "depth"}, {"z", depth->z}});
        if (k % sensor_div == 0)
          log_->write({{"k", "meas"}, {"t", t}, {"s", "cam"},
                       {"n", static_cast<int>(detections.size())}});
      }

      // --- filters ---
      run_homing_filter(t, dt, fix, imu, dvl, depth);
      run_docking_filter(t, dt, imu, dvl, detections);
      if (fix) {
        fix_window_.add(t);
        usbl_centers_.push_back(ekf_homing_.state().position().head<2>() -
                                Eigen::Vector2d(fix->north_offset_m, fix->east_offset_m));
        if (usbl_centers_.size() > 8) usbl_centers_.pop_front();
      }

      // --- mission ---
      MissionInputs in = gather_inputs(t, detections);
      MissionPhase before = sm_.phase();
      TickResult tick = sm_.tick(in);
      if (tick.phase != before) on_phase_change(t, before, tick.phase, tick.reason);
      if (tick.action == MissionAction::START_REATTEMPT) start_reattempt(t);

      // --- guidance + actuation ---
      ThrustCommand cmd = compute_command(t, dt);
      CurrentField env = sc_.current;
      env.velocity_ne += sc_.waves.velocity(t, truth_.position.z());
      truth_ = step(truth_, cmd, env, sc_.vehicle, latch_, t_world_station_, dt);

      maybe_latch(t);
      track_waypoint_progress(t);
      accumulate_nees();
      if (k % std::max(1, sc_.sim.log_every_n_steps) == 0) log_step(t);

      if (sm_.phase() == MissionPhase::ABORT) break;
      if (mission_complete_) break;
    }
    return finish();
  }

  const WaypointPath& loop_left() const { return loop_left_; }
  const WaypointPath& loop_right() const { return loop_right_; }

 private:
  // ---------------------------------------------------------------- setup
  void init_truth_and_filters() {
    std::normal_distribution<double> n01(0.0, 1.0);
    const StartSpec& st = sc_.start;

    if (st.mode == StartMode::NEAR_STATION) {
      Eigen::Vector3d p_station;
      double yaw_station = 0.0;
      const auto& box_max = layout_.station.box_max;
      const auto& box_min = layout_.station.box_min;
      switch (st.approach) {
        case Approach::FRONT:
          p_station = {box_min.x() - 3.1, 0.0, 0.0};
          yaw_station = 0.0;
          break;
        case Approach::RIGHT:
          p_station = {0.6, box_max.y() + sc_.stand_off_m + 0.2, 0.0};
          yaw_station = -M_PI / 2;
          break;
        case Approach::LEFT:
          p_station = {0.6, box_min.y() - sc_.stand_off_m - 0.2, 0.0};
          yaw_station = M_PI / 2;
          break;
      }
      p_station += st.jitter_pos_m *
                   Eigen::Vector3d(n01(rng_), n01(rng_), 0.5 * n01(rng_));
      yaw_station += st.jitter_yaw_rad * n01(rng_);

      Pose start_world = compose(
          t_world_station_, Pose::from_euler(p_station, 0, 0, yaw_station, FrameId::STATION));
      truth_.position = start_world.position;
      truth_.yaw = start_world.yaw();

      // Coarse prior handed over from the homing stage.
      Pose t_ts_body = compose(invert(t_world_tagstar_), start_world);
      Vector15 x0 = Vector15::Zero();
      x0.segment<3>(SX) = t_ts_body.position +
                          st.initial_est_err_m *
                              Eigen::Vector3d(n01(rng_), n01(rng_), 0.3 * n01(rng_));
      x0(SYAW) = wrap_angle(t_ts_body.yaw() + 0.05 * n01(rng_));
      ekf_docking_.init(x0, 0.0);
      docking_started_t_ = 0.0;
      last_marker_t_ = 0.0;
    } else {
      truth_.position = {st.surface_start_ne.x(), st.surface_start_ne.y(),
                         sc_.homing.surface_depth_m};
      truth_.yaw = 0.0;
      Vector15 x0 = Vector15::Zero();
      x0.segment<3>(SX) = truth_.position +
                          st.initial_est_err_m *
                              Eigen::Vector3d(n01(rng_), n01(rng_), 0.1 * n01(rng_));
      x0(SYAW) = truth_.yaw;
      ekf_homing_.init(x0, 0.0);
    }
  }

  // -------------------------------------------------------------- filters
  void run_homing_filter(double t, double dt, const std::optional<UsblFix>& fix,
                         const ImuMeasurement& imu,
                         const std::optional<DvlMeasurement>& dvl,
                         const std::optional<DepthMeasurement>& depth) {
    if (!ekf_homing_.initialized()) return;
    ekf_homing_.predict(dt);
    const SensorNoise& n = sc_.sensor_noise;
    ImuPacket ip;
    ip.rates = imu.rates;
    ip.accel = imu.accel;
    ip.heading = imu.heading;
    ip.rates_cov = sq(n.gyro_sigma_rps) * Eigen::Matrix3d::Identity();
    ip.accel_cov = sq(n.accel_sigma_mps2) * Eigen::Matrix3d::Identity();
    ip.heading_var = sq(n.compass_sigma_rad);
    ekf_homing_.update({t, ip});
    if (dvl) {
      DvlPacket dp{dvl->vel_body, sq(n.dvl_sigma_mps) * Eigen::Matrix3d::Identity()};
      ekf_homing_.update({t, dp});
    }
    if (depth) {
      ekf_homing_.update({t, DepthPacket{depth->z, sq(n.depth_sigma_m)}});
    }
    if (fix) {
      UsblPositionPacket up;
      up.ne = t_world_station_.position.head<2>() +
              Eigen::Vector2d(fix->north_offset_m, fix->east_offset_m);
      up.cov = sq(sc_.usbl.sigma_m) * Eigen::Matrix2d::Identity();
      ekf_homing_.update({t, up});
    }
  }

  void run_docking_filter(double t, double dt, const ImuMeasurement& imu,
                          const std::optional<DvlMeasurement>& dvl,
                          const std::vector<MarkerDetection>& detections) {
    if (!ekf_docking_.initialized()) return;
    ekf_docking_.predict(dt);
    const SensorNoise& n = sc_.sensor_noise;
    ImuPacket ip;
    ip.rates = imu.rates;
    ip.accel = imu.accel;
    ip.heading = imu.heading;  // skipped by config when compass is excluded
    ip.rates_cov = sq(n.gyro_sigma_rps) * Eigen::Matrix3d::Identity();
    ip.accel_cov = sq(n.accel_sigma_mps2) * Eigen::Matrix3d::Identity();
    ip.heading_var = sq(n.compass_sigma_rad);
    ekf_docking_.update({t, ip});
    if (dvl) {
      DvlPacket dp{dvl->vel_body, sq(n.dvl_sigma_mps) * Eigen::Matrix3d::Identity()};
      ekf_docking_.update({t, dp});
    }
    if (!detections.empty()) {
      auto fused = pose_from_detections(detections, layout_, sc_.camera, sc_.marker_noise);
      if (fused) {
        MarkerPosePacket mp;
        mp.pose.segment<3>(0) = fused->first.position;
        mp.pose(3) = fused->first.roll();
        mp.pose(4) = fused->first.pitch();
        mp.pose(5) = fused->first.yaw();
        mp.cov = fused->second;
        auto stats = ekf_docking_.update({t, mp});
        if (sc_.sim.log_measurements && log_ && log_->enabled() && stats)
          log_->write({{"k", "meas"}, {"t", t}, {"s", "nis"}, {"v", stats->nis},
                       {"dim", stats->dim}});
        last_marker_t_ = t;
        visual_lock_ = true;
      }
    }
  }

  // -------------------------------------------------------------- mission
  MissionInputs gather_inputs(double t, const std::vector<MarkerDetection>& detections) {
    MissionInputs in;
    in.t = t;
    in.homing_triggered =
        fix_window_.triggered(sc_.homing.required_fix_count, sc_.homing.fix_window_s);

    if (!usbl_centers_.empty()) {
      Eigen::Vector2d c = Eigen::Vector2d::Zero();
      for (const auto& v : usbl_centers_) c += v;
      usbl_center_est_ = c / static_cast<double>(usbl_centers_.size());
    }
    if (usbl_center_est_) {
      Waypoint target = homing_target(*usbl_center_est_, sc_.homing);
      in.in_target_sphere =
          (ekf_homing_.state().position().head<2>() - target.position.head<2>()).norm() <=
          sc_.homing.target_radius_m;
    }
    in.depth_reached =
        ekf_homing_.initialized() &&
        ekf_homing_.state().position().z() >= sc_.homing.docking_depth_m;
    in.marker_detected = !detections.empty();
    in.marker_loss_s = t - last_marker_t_;
    in.in_terminal_leg = in_terminal_leg_;
    in.latch_ok = truth_.latched;
    in.undock_commanded = undock_requested_;
    if (sm_.phase() == MissionPhase::UNDOCK) {
      Pose est_station = estimate_pose_station();
      in.clear_of_funnel =
          est_station.position.x() < layout_.station.box_min.x() - 0.3;
    }
    in.circuit_complete = circuit_complete_;
    return in;
  }

  void on_phase_change(double t, MissionPhase from, MissionPhase to,
                       const std::string& reason) {
    log_phase(t, from, to, reason);
    timeline_.push_back({t, from, to, reason});
    PidState fresh;
    pid_ = fresh;

    switch (to) {
      case MissionPhase::VISUAL_DOCKING: {
        if (first_docking_t_ < 0.0) first_docking_t_ = t;
        last_marker_t_ = t;  // grace period for the loss clock
        if (!ekf_docking_.initialized()) hand_over_to_docking_filter(t);
        WaypointSelection sel = select_initial_waypoint(
            ekf_docking_.state().pose(FrameId::TAG_STAR), loop_left_, loop_right_);
        current_path_ = (sel.kind == PathKind::LEFT_LOOP) ? &loop_left_ : &loop_right_;
        wp_index_ = sel.index;
        in_terminal_leg_ = false;
        circuit_complete_ = false;
        break;
      }
      case MissionPhase::LATCHED: {
        if (first_latch_t_ < 0.0) {
          first_latch_t_ = t;
        } else {
          ++redocks_;
        }
        latch_dwell_until_ = t + 5.0;
        undock_requested_ = false;
        if (!sc_.plan.inspection || circuits_done_ >= 2) mission_complete_ = true;
        break;
      }
      case MissionPhase::UNDOCK: {
        undock_push_until_ = t + 1.5;
        latch_rearm_pending_ = true;
        break;
      }
      case MissionPhase::INSPECTION: {
        current_path_ = (circuits_done_ == 0) ? &insp_right_ : &insp_left_;
        wp_index_ = 0;
        circuit_complete_ = false;
        inspection_start_t_ = t;
        break;
      }
      case MissionPhase::DESCENT: {
        descent_target_ = homing_target(*usbl_center_est_, sc_.homing);
        break;
      }
      default:
        break;
    }
    if (from == MissionPhase::INSPECTION) {
      if (inspection_start_t_ >= 0.0)
        inspection_legs_.push_back(t - inspection_start_t_);
      ++circuits_done_;
      inspection_start_t_ = -1.0;
    }
  }

  void hand_over_to_docking_filter(double t) {
    // Seed the tag*-frame filter from the world-frame estimate.
    Pose est_world = ekf_homing_.state().pose(FrameId::WORLD_NED);
    Pose t_ts_body = compose(invert(t_world_tagstar_), est_world);
    Vector15 x0 = Vector15::Zero();
    x0.segment<3>(SX) = t_ts_body.position;
    x0(SROLL) = t_ts_body.roll();
    x0(SPITCH) = t_ts_body.pitch();
    x0(SYAW) = t_ts_body.yaw();
    x0.segment<3>(SU) = ekf_homing_.state().vel_body();
    x0.segment<3>(SP) = ekf_homing_.state().rates();
    x0.segment<3>(SAX) = ekf_homing_.state().accel_body();
    ekf_docking_.init(x0, t);
    docking_started_t_ = t;
  }

  void start_reattempt(double t) {
    sm_.note_reattempt_started(t);
    last_marker_t_ = t;
    // Fall back to the nearest loop start and walk the loop again.
    Pose est = ekf_docking_.state().pose(FrameId::TAG_STAR);
    double d_r = (est.position - loop_right_.waypoints[0].position).norm();
    double d_l = (est.position - loop_left_.waypoints[0].position).norm();
    current_path_ = (d_l < d_r) ? &loop_left_ : &loop_right_;
    wp_index_ = 0;
    in_terminal_leg_ = false;
    pid_.reset();
    ++reattempts_;
  }

  // ------------------------------------------------------------- guidance
  ThrustCommand compute_command(double t, double dt) {
    switch (sm_.phase()) {
      case MissionPhase::SURFACE_TRANSIT: {
        Waypoint wp;
        wp.frame = FrameId::WORLD_NED;
        wp.position = {sc_.station_world_ne.x(), sc_.station_world_ne.y(),
                       sc_.homing.surface_depth_m};
        Eigen::Vector2d to = wp.position.head<2>() -
                             ekf_homing_.state().position().head<2>();
        wp.heading_rad = (to.norm() > 1.0)
                             ? std::atan2(to.y(), to.x())
                             : sc_.homing.descent_heading_rad;
        wp.cruise_speed_mps = sc_.homing.transit_speed_mps;
        return control(ekf_homing_.state(), wp, sc_.gains, pid_, dt);
      }
      case MissionPhase::ACOUSTIC_HOMING: {
        Waypoint wp = homing_target(*usbl_center_est_, sc_.homing);
        return control(ekf_homing_.state(), wp, sc_.gains, pid_, dt);
      }
      case MissionPhase::DESCENT: {
        Waypoint wp = descent_target_;
        wp.position.z() = sc_.homing.docking_depth_m + 0.5;
        wp.cruise_speed_mps = sc_.homing.descent_rate_mps;
        return control(ekf_homing_.state(), wp, sc_.gains, pid_, dt);
      }
      case MissionPhase::VISUAL_DOCKING:
      case MissionPhase::INSPECTION: {
        const Waypoint& wp = current_path_->waypoints[wp_index_];
        return control(ekf_docking_.state(), wp, sc_.gains, pid_, dt);
      }
      case MissionPhase::LATCHED: {
        if (sc_.plan.inspection && circuits_done_ < 2 && t >= latch_dwell_until_)
          undock_requested_ = true;
        return {};
      }
      case MissionPhase::UNDOCK: {
        if (t < undock_push_until_) {
          // Deliberate breakaway: commanded surge beyond the magnet rating.
          ThrustCommand cmd;
          cmd.surge_n = -(latch_.breakaway_thrust_n * 1.1);
          return cmd;
        }
        Waypoint back;
        back.frame = FrameId::TAG_STAR;
        back.position = loop_right_.waypoints[2].position;  // shared frontal align
        back.heading_rad = 0.0;
        back.cruise_speed_mps = sc_.speeds.approach;
        return control(ekf_docking_.state(), back, sc_.gains, pid_, dt);
      }
      case MissionPhase::ABORT:
        return {};
    }
    return {};
  }

  void maybe_latch(double t) {
    if (truth_.latched) return;
    if (sm_.phase() != MissionPhase::VISUAL_DOCKING) return;
    Pose truth_station = compose(invert(t_world_station_), truth_.pose_world());
    truth_station.frame = FrameId::STATION;
    if (latch_rearm_pending_) {
      if ((truth_station.position - latch_.dock_position).norm() >
          2.0 * latch_.capture_radius_m)
        latch_rearm_pending_ = false;
      else
        return;
    }
    if (latch_check(truth_station, latch_))
      truth_ = engage_latch(truth_, latch_, t_world_station_);
  }

  void track_waypoint_progress(double t) {
    if (!current_path_) return;
    MissionPhase ph = sm_.phase();
    if (ph != MissionPhase::VISUAL_DOCKING && ph != MissionPhase::INSPECTION) return;
    if (wp_index_ >= current_path_->waypoints.size()) return;
    const Waypoint& wp = current_path_->waypoints[wp_index_];
    if (waypoint_reached(ekf_docking_.state().pose(FrameId::TAG_STAR), wp)) {
      log_wp(t, current_path_->kind, wp_index_, wp.label);
      ++waypoints_reached_;
      if (wp_index_ + 1 < current_path_->waypoints.size()) {
        ++wp_index_;
        if (ph == MissionPhase::VISUAL_DOCKING &&
            current_path_->waypoints[wp_index_].label == "dock")
          in_terminal_leg_ = true;
      } else if (ph == MissionPhase::INSPECTION) {
        circuit_complete_ = true;
      }
    }
  }

  void accumulate_nees() {
    if (!ekf_docking_.initialized() || !visual_lock_) return;
    Pose truth_ts = compose(invert(t_world_tagstar_), truth_.pose_world());
    Vector15 truth_x = Vector15::Zero();
    truth_x.segment<3>(SX) = truth_ts.position;
    truth_x(SYAW) = truth_ts.yaw();
    truth_x.segment<3>(SU) = truth_.vel_body;
    truth_x(SR) = truth_.yaw_rate;
    truth_x.segment<3>(SAX) = truth_.accel_body;
    static const std::vector<int> pose_idx{SX, SY, SZ, SYAW};
    nees_sum_ += nees(ekf_docking_.state().x, ekf_docking_.covariance(), truth_x,
                      pose_idx);
    ++nees_count_;
  }

  void note_face_observed(int tag_id) {
    const TagSpec* tag = layout_.find(tag_id);
    if (!tag) return;
    for (Face f : faces_observed_)
      if (f == tag->face) return;
    faces_observed_.push_back(tag->face);
  }

  Pose estimate_pose_station() const {
    Pose est_ts = ekf_docking_.state().pose(FrameId::TAG_STAR);
    Pose out = compose(t_station_tagstar_, est_ts);
    out.frame = FrameId::STATION;
    return out;
  }

  // -------------------------------------------------------------- logging
  void log_meta() {
    if (!log_ || !log_->enabled()) return;
    log_->write({{"k", "meta"},
                 {"v", kLogSchemaVersion},
                 {"seed", seed_},
                 {"site", to_string(sc_.site)},
                 {"approach", to_string(sc_.start.approach)},
                 {"stand_off_m", sc_.stand_off_m},
                 {"dt_s", sc_.sim.dt_s}});
  }

  void log_phase(double t, MissionPhase from, MissionPhase to, const std::string& r) {
    if (!log_ || !log_->enabled()) return;
    log_->write({{"k", "phase"}, {"t", t}, {"from", to_string(from)},
                 {"to", to_string(to)}, {"reason", r}});
  }

  void log_wp(double t, PathKind kind, size_t index, const std::string& label) {
    if (!log_ || !log_->enabled()) return;
    log_->write({{"k", "wp"}, {"t", t}, {"path", to_string(kind)},
                 {"index", index}, {"label", label}});
  }

  void log_step(double t) {
    if (!log_ || !log_->enabled()) return;
    Pose est_world = active_estimate_world();
    log_->write({{"k", "step"},
                 {"t", t},
                 {"ph", to_string(sm_.phase())},
                 {"tp", {truth_.position.x(), truth_.position.y(), truth_.position.z()}},
                 {"tyaw", truth_.yaw},
                 {"tv", {truth_.vel_body.x(), truth_.vel_body.y(), truth_.vel_body.z()}},
                 {"ep", {est_world.position.x(), est_world.position.y(),
                         est_world.position.z()}},
                 {"eyaw", est_world.yaw()},
                 {"nm", last_camera_count_},
                 {"loss", t - last_marker_t_}});
  }

  Pose active_estimate_world() const {
    MissionPhase ph = sm_.phase();
    bool docking_frame = ekf_docking_.initialized() &&
                         (ph == MissionPhase::VISUAL_DOCKING || ph == MissionPhase::LATCHED ||
                          ph == MissionPhase::UNDOCK || ph == MissionPhase::INSPECTION);
    if (docking_frame) {
      Pose est_ts = ekf_docking_.state().pose(FrameId::TAG_STAR);
      Pose out = compose(t_world_tagstar_, est_ts);
      out.frame = FrameId::WORLD_NED;
      return out;
    }
    if (ekf_homing_.initialized())
      return ekf_homing_.state().pose(FrameId::WORLD_NED);
    return truth_.pose_world();
  }

  TrialResult finish() {
    TrialResult r;
    r.seed = seed_;
    r.approach = sc_.start.approach;
    r.timeline = timeline_;
    r.waypoints_reached = waypoints_reached_;
    r.inspection_leg_s = inspection_legs_;
    r.redocks = redocks_;
    r.faces_observed = faces_observed_;
    r.nees_mean = nees_count_ ? nees_sum_ / nees_count_ : 0.0;

    // Success is the docking objective: latched within the duration cap.
    // Later inspection-phase trouble never retracts an achieved latch.
    bool docked = first_latch_t_ >= 0.0;
    r.success = docked;
    if (docked && first_docking_t_ >= 0.0)
      r.duration_s = first_latch_t_ - first_docking_t_;
    if (!r.success) {
      if (sm_.phase() == MissionPhase::ABORT && !timeline_.empty())
        r.abort_reason = timeline_.back().reason;
      else
        r.abort_reason = "duration_cap";
    }
    r.inspection_complete = sc_.plan.inspection && circuits_done_ >= 2 && redocks_ >= 2;

    Pose est_world = active_estimate_world();
    r.final_pos_err_m = (est_world.position - truth_.position).norm();

    if (log_ && log_->enabled()) {
      nlohmann::json jr = {{"k", "result"},
                           {"success", r.success},
                           {"duration_s", r.duration_s},
                           {"seed", seed_},
                           {"approach", to_string(r.approach)},
                           {"waypoints_reached", r.waypoints_reached},
                           {"final_pos_err_m", r.final_pos_err_m},
                           {"nees_mean", r.nees_mean},
                           {"redocks", r.redocks}};
      jr["abort_reason"] = r.abort_reason ? nlohmann::json(*r.abort_reason)
                                          : nlohmann::json(nullptr);
      log_->write(jr);
    }
    return r;
  }

  static double sq(double x) { return x * x; }

  // ----------------------------------------------------------------- data
  ScenarioConfig sc_;
  const MarkerLayout& layout_;
  uint64_t seed_;
  Rng rng_;
  JsonlLogger* log_;
  Pose t_world_station_;
  Pose t_station_tagstar_;
  Pose t_world_tagstar_;
  LatchState latch_;
  OcclusionSchedule fish_;
  WaypointPath loop_left_, loop_right_, insp_left_, insp_right_;
  VehicleState truth_;
  Ekf ekf_docking_, ekf_homing_;
  MissionStateMachine sm_;
  CompassDrift drift_;
  FixWindow fix_window_;
  std::deque<Eigen::Vector2d> usbl_centers_;
  std::optional<Eigen::Vector2d> usbl_center_est_;
  Waypoint descent_target_;
  PidState pid_;
  const WaypointPath* current_path_ = nullptr;
  size_t wp_index_ = 0;
  bool in_terminal_leg_ = false;
  bool circuit_complete_ = false;
  bool visual_lock_ = false;
  bool undock_requested_ = false;
  bool latch_rearm_pending_ = false;
  bool mission_complete_ = false;
  double last_marker_t_ = -1e9;
  double first_docking_t_ = -1.0;
  double first_latch_t_ = -1.0;
  double latch_dwell_until_ = 0.0;
  double undock_push_until_ = 0.0;
  double docking_started_t_ = -1.0;
  double inspection_start_t_ = -1.0;
  int circuits_done_ = 0;
  int redocks_ = 0;
  int reattempts_ = 0;
  int waypoints_reached_ = 0;
  double nees_sum_ = 0.0;
  int nees_count_ = 0;
  int last_camera_count_ = 0;
  std::vector<double> inspection_legs_;
  std::vector<PhaseEvent> timeline_;
  std::vector<Face> faces_observed_;
};

/// Runs one seeded trial; the layout is loaded from the scenario's path.
inline TrialResult run_mission(const ScenarioConfig& sc, uint64_t seed,
                               JsonlLogger* log = nullptr) {
  MarkerLayout layout = load_layout(sc.layout_path);
  MissionRunner runner(sc, layout, seed, log);
  return runner.run();
}

inline TrialResult run_mission(const ScenarioConfig& sc, const MarkerLayout& layout,
                               uint64_t seed, JsonlLogger* log = nullptr) {
  MissionRunner runner(sc, layout, seed, log);
  return runner.run();
}

}  // namespace rovdock
