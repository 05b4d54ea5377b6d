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

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rovdock/mission.hpp"
#include "rovdock/sensors.hpp"

namespace rovdock {

constexpr int kConfigSchemaVersion = 1;

enum class SiteProfile { SHALLOW_TBS, DEEP_90M };
enum class Approach { FRONT, LEFT, RIGHT };
enum class StartMode { NEAR_STATION, SURFACE };

inline const char* to_string(SiteProfile s) {
  return s == SiteProfile::SHALLOW_TBS ? "SHALLOW_TBS" : "DEEP_90M";
}
inline const char* to_string(Approach a) {
  switch (a) {
    case Approach::FRONT: return "front";
    case Approach::LEFT: return "left";
    case Approach::RIGHT: return "right";
  }
  return "?";
}
inline std::optional<Approach> approach_from_string(const std::string& s) {
  if (s == "front" || s == "FRONT") return Approach::FRONT;
  if (s == "left" || s == "LEFT") return Approach::LEFT;
  if (s == "right" || s == "RIGHT") return Approach::RIGHT;
  return std::nullopt;
}

/// Surface wave surge disturbance, decaying exponentially with depth.
/// Only the shallow site sees it; at 90 m there is no wave activity.
struct WaveDisturbance {
  double amplitude_mps = 0.0;
  double period_s = 6.0;
  double decay_depth_m = 3.0;
  Eigen::Vector2d direction_ne{1.0, 0.0};

  Eigen::Vector2d velocity(double t, double depth_m) const {
    if (amplitude_mps <= 0.0) return Eigen::Vector2d::Zero();
    double a = amplitude_mps * std::exp(-std::max(depth_m, 0.0) / decay_depth_m);
    return direction_ne.normalized() * (a * std::sin(2.0 * M_PI * t / period_s));
  }
};

struct StartSpec {
  StartMode mode = StartMode::NEAR_STATION;
  Approach approach = Approach::FRONT;
  double jitter_pos_m = 0.20;
  double jitter_yaw_rad = 8.0 * M_PI / 180.0;
  double initial_est_err_m = 0.30;
  Eigen::Vector2d surface_start_ne{-30.0, 10.0};
};

struct SimParams {
  double dt_s = 0.05;
  double duration_cap_s = 420.0;
  int log_every_n_steps = 1;
  bool log_measurements = false;
};

struct MissionPlan {
  bool inspection = false;  // undock -> right circuit -> redock -> left -> redock
};

struct ScenarioConfig {
  SiteProfile site = SiteProfile::DEEP_90M;
  std::string layout_path;  // resolved to absolute on load
  SimParams sim;
  Eigen::Vector2d station_world_ne{0.0, 0.0};
  double station_depth_m = 90.0;
  double station_yaw_rad = 0.0;
  VehicleParams vehicle;
  CurrentField current;
  WaveDisturbance waves;
  UsblParams usbl;
  SensorNoise sensor_noise;
  MarkerNoise marker_noise;
  CameraModel camera;
  EkfConfig ekf_docking;
  EkfConfig ekf_homing;
  ControllerGains gains;
  LoopSpeeds speeds;
  double stand_off_m = 1.5;
  double inspection_cruise_mps = 0.15;
  HomingConfig homing;
  AbortRules abort;
  OcclusionConfig occlusions;
  LatchState latch;
  StartSpec start;
  MissionPlan plan;

  Pose station_pose_world() const {
    return Pose::from_euler({station_world_ne.x(), station_world_ne.y(), station_depth_m},
                            0.0, 0.0, station_yaw_rad, FrameId::WORLD_NED);
  }
};

/// Site profiles fix the environment defaults; explicit config keys
/// override them field by field.
inline ScenarioConfig default_scenario(SiteProfile site) {
  ScenarioConfig c;
  c.site = site;
  if (site == SiteProfile::DEEP_90M) {
    c.station_depth_m = 90.0;
    c.usbl.station_depth_m = 90.0;
    c.homing.docking_depth_m = 89.0;
    // No external light at 90 m: reduced visual range.
    c.camera.attenuation_length_m = 4.0;
    // Predictable current, no wave activity; ops pick calm windows.
    c.current.velocity_ne = {0.05, 0.12};
    c.waves.amplitude_mps = 0.0;
    // Magnetic drift near the structure: compass out of the docking filter.
    c.ekf_docking.compass_enabled = false;
    c.sensor_noise.compass_drift_enabled = true;
    c.occlusions.enabled = true;
    c.occlusions.rate_per_s = 0.05;
    c.occlusions.duration_min_s = 1.5;
    c.occlusions.duration_max_s = 6.0;
    c.occlusions.school_frac = 0.15;
  } else {
    c.station_depth_m = 5.0;
    c.usbl.station_depth_m = 5.0;
    c.homing.docking_depth_m = 4.0;
    c.camera.attenuation_length_m = 8.0;
    c.current.velocity_ne = {0.10, 0.05};
    c.waves.amplitude_mps = 0.15;
    c.ekf_docking.compass_enabled = true;
    c.sensor_noise.compass_drift_enabled = false;
    c.occlusions.enabled = false;
  }
  return c;
}

namespace config_detail {

using nlohmann::json;

inline void expect_keys(const json& j, const std::set<std::string>& allowed,
                        const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw Error(ErrorCode::CONFIG_ERROR, where + ": unknown key '" + it.key() + "'");
}

inline void get(const json& j, const char* key, double& out) {
  if (j.contains(key)) out = j.at(key).get<double>();
}
inline void get(const json& j, const char* key, int& out) {
  if (j.contains(key)) out = j.at(key).get<int>();
}
inline void get(const json& j, const char* key, bool& out) {
  if (j.contains(key)) out = j.at(key).get<bool>();
}
inline void get_deg(const json& j, const char* key, double& out_rad) {
  if (j.contains(key)) out_rad = j.at(key).get<double>() * M_PI / 180.0;
}
inline void get(const json& j, const char* key, Eigen::Vector2d& out) {
  if (j.contains(key)) {
    const auto& a = j.at(key);
    out = {a[0].get<double>(), a[1].get<double>()};
  }
}
inline void get(const json& j, const char* key, Eigen::Vector3d& out) {
  if (j.contains(key)) out = detail::vec3_from_json(j.at(key));
}

inline void parse_vehicle(const json& j, VehicleParams& v) {
  expect_keys(j,
              {"mass_kg", "added_mass_kg", "yaw_inertia", "yaw_added_inertia",
               "linear_damping", "quad_damping", "yaw_linear_damping",
               "yaw_quad_damping", "max_thrust_n", "max_yaw_moment_nm", "max_speed_mps",
               "sway_coupling"},
              "vehicle");
  get(j, "mass_kg", v.mass_kg);
  get(j, "added_mass_kg", v.added_mass_kg);
  get(j, "yaw_inertia", v.yaw_inertia);
  get(j, "yaw_added_inertia", v.yaw_added_inertia);
  get(j, "linear_damping", v.linear_damping);
  get(j, "quad_damping", v.quad_damping);
  get(j, "yaw_linear_damping", v.yaw_linear_damping);
  get(j, "yaw_quad_damping", v.yaw_quad_damping);
  get(j, "max_thrust_n", v.max_thrust_n);
  get(j, "max_yaw_moment_nm", v.max_yaw_moment_nm);
  get(j, "max_speed_mps", v.max_speed_mps);
  get(j, "sway_coupling", v.sway_coupling);
  if (!v.valid()) throw Error(ErrorCode::CONFIG_ERROR, "vehicle params invalid");
}

inline void parse_current(const json& j, CurrentField& c) {
  expect_keys(j, {"velocity_ne", "depth_profile", "shielding"}, "current");
  get(j, "velocity_ne", c.velocity_ne);
  get(j, "shielding", c.shielding);
  if (j.contains("depth_profile")) {
    c.depth_profile.clear();
    for (const auto& e : j.at("depth_profile"))
      c.depth_profile.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  if (c.velocity_ne.norm() > 1.5)
    throw Error(ErrorCode::CONFIG_ERROR, "current exceeds 1.5 m/s ceiling");
  if (c.shielding < 0.0 || c.shielding > 1.0)
    throw Error(ErrorCode::CONFIG_ERROR, "shielding outside [0,1]");
}

inline void parse_waves(const json& j, WaveDisturbance& w) {
  expect_keys(j, {"amplitude_mps", "period_s", "decay_depth_m", "direction_ne"}, "waves");
  get(j, "amplitude_mps", w.amplitude_mps);
  get(j, "period_s", w.period_s);
  get(j, "decay_depth_m", w.decay_depth_m);
  get(j, "direction_ne", w.direction_ne);
}

inline void parse_usbl(const json& j, UsblParams& u) {
  expect_keys(j,
              {"ping_period_s", "sigma_m", "dropout_prob", "cone_surface_diameter_m",
               "station_depth_m"},
              "usbl");
  get(j, "ping_period_s", u.ping_period_s);
  get(j, "sigma_m", u.sigma_m);
  get(j, "dropout_prob", u.dropout_prob);
  get(j, "cone_surface_diameter_m", u.cone_surface_diameter_m);
  get(j, "station_depth_m", u.station_depth_m);
  if (u.dropout_prob < 0 || u.dropout_prob > 1)
    throw Error(ErrorCode::CONFIG_ERROR, "usbl dropout outside [0,1]");
}

inline void parse_sensor_noise(const json& j, SensorNoise& s) {
  expect_keys(j,
              {"dvl_sigma_mps", "gyro_sigma_rps", "accel_sigma_mps2",
               "compass_sigma_deg", "compass_drift_enabled", "compass_drift_deg_per_min",
               "depth_sigma_m"},
              "sensor_noise");
  get(j, "dvl_sigma_mps", s.dvl_sigma_mps);
  get(j, "gyro_sigma_rps", s.gyro_sigma_rps);
  get(j, "accel_sigma_mps2", s.accel_sigma_mps2);
  get_deg(j, "compass_sigma_deg", s.compass_sigma_rad);
  get(j, "compass_drift_enabled", s.compass_drift_enabled);
  get(j, "compass_drift_deg_per_min", s.compass_drift_deg_per_min);
  get(j, "depth_sigma_m", s.depth_sigma_m);
}

inline void parse_marker_noise(const json& j, MarkerNoise& m) {
  expect_keys(j, {"pos_base_m", "ang_base_rad", "range_ref_m"}, "marker_noise");
  get(j, "pos_base_m", m.pos_base_m);
  get(j, "ang_base_rad", m.ang_base_rad);
  get(j, "range_ref_m", m.range_ref_m);
}

inline void parse_camera(const json& j, CameraModel& c) {
  expect_keys(j,
              {"hfov_deg", "vfov_deg", "image_width_px", "min_cell_px",
               "attenuation_length_m", "max_view_angle_deg", "funnel_interior_view_deg",
               "dict_range_factor", "mount_offset_m"},
              "camera");
  get_deg(j, "hfov_deg", c.hfov_rad);
  get_deg(j, "vfov_deg", c.vfov_rad);
  get(j, "image_width_px", c.image_width_px);
  get(j, "min_cell_px", c.min_cell_px);
  get(j, "attenuation_length_m", c.attenuation_length_m);
  get_deg(j, "funnel_interior_view_deg", c.funnel_interior_view_limit_rad);
  if (j.contains("max_view_angle_deg"))
    for (const auto& [k, v] : j.at("max_view_angle_deg").items())
      c.max_view_angle_rad[std::stoi(k)] = v.get<double>() * M_PI / 180.0;
  if (j.contains("dict_range_factor"))
    for (const auto& [k, v] : j.at("dict_range_factor").items())
      c.dict_range_factor[std::stoi(k)] = v.get<double>();
  get(j, "mount_offset_m", c.t_body_camera.position);
  if (c.hfov_rad <= 0 || c.hfov_rad >= M_PI || c.attenuation_length_m <= 0)
    throw Error(ErrorCode::CONFIG_ERROR, "camera model invalid");
}

inline void parse_ekf(const json& j, EkfConfig& e, const std::string& where) {
  expect_keys(j,
              {"q_pos", "q_ang", "q_vel", "q_rate", "q_accel", "compass_enabled",
               "camera_confidence_scale"},
              where);
  get(j, "q_pos", e.q_pos);
  get(j, "q_ang", e.q_ang);
  get(j, "q_vel", e.q_vel);
  get(j, "q_rate", e.q_rate);
  get(j, "q_accel", e.q_accel);
  get(j, "compass_enabled", e.compass_enabled);
  get(j, "camera_confidence_scale", e.camera_confidence_scale);
  if (e.q_pos <= 0 || e.q_ang <= 0 || e.q_vel <= 0 || e.q_rate <= 0 || e.q_accel <= 0)
    throw Error(ErrorCode::CONFIG_ERROR, where + ": noise terms must be > 0");
}

inline void parse_gains(const json& j, ControllerGains& g) {
  expect_keys(j,
              {"pos_p", "vel_p", "vel_i", "vel_d", "integral_clamp_n", "thrust_clamp_n",
               "yaw_pos_p", "yaw_rate_limit", "yaw_rate_p", "yaw_clamp_nm"},
              "gains");
  get(j, "pos_p", g.pos_p);
  get(j, "vel_p", g.vel_p);
  get(j, "vel_i", g.vel_i);
  get(j, "vel_d", g.vel_d);
  get(j, "integral_clamp_n", g.integral_clamp_n);
  get(j, "thrust_clamp_n", g.thrust_clamp_n);
  get(j, "yaw_pos_p", g.yaw_pos_p);
  get(j, "yaw_rate_limit", g.yaw_rate_limit);
  get(j, "yaw_rate_p", g.yaw_rate_p);
  get(j, "yaw_clamp_nm", g.yaw_clamp_nm);
  if (!g.valid()) throw Error(ErrorCode::CONFIG_ERROR, "gains invalid");
}

inline void parse_speeds(const json& j, LoopSpeeds& s) {
  expect_keys(j, {"transit", "approach", "entry", "dock"}, "speeds");
  get(j, "transit", s.transit);
  get(j, "approach", s.approach);
  get(j, "entry", s.entry);
  get(j, "dock", s.dock);
}

inline void parse_homing(const json& j, HomingConfig& h) {
  expect_keys(j,
              {"required_fix_count", "fix_window_s", "target_radius_m", "offset_north_m",
               "offset_east_m", "docking_depth_m", "descent_heading_deg",
               "descent_rate_mps", "transit_speed_mps", "surface_depth_m"},
              "homing");
  get(j, "required_fix_count", h.required_fix_count);
  get(j, "fix_window_s", h.fix_window_s);
  get(j, "target_radius_m", h.target_radius_m);
  get(j, "offset_north_m", h.offset_north_m);
  get(j, "offset_east_m", h.offset_east_m);
  get(j, "docking_depth_m", h.docking_depth_m);
  get_deg(j, "descent_heading_deg", h.descent_heading_rad);
  get(j, "descent_rate_mps", h.descent_rate_mps);
  get(j, "transit_speed_mps", h.transit_speed_mps);
  get(j, "surface_depth_m", h.surface_depth_m);
  if (h.required_fix_count < 1 || h.fix_window_s <= 0)
    throw Error(ErrorCode::CONFIG_ERROR, "homing fix gate invalid");
}

inline void parse_abort(const json& j, AbortRules& a) {
  expect_keys(j, {"marker_loss_timeout_s", "phase_timeout_s", "max_reattempts"},
              "abort");
  get(j, "marker_loss_timeout_s", a.marker_loss_timeout_s);
  get(j, "phase_timeout_s", a.phase_timeout_s);
  get(j, "max_reattempts", a.max_reattempts);
  if (a.marker_loss_timeout_s <= 0 || a.phase_timeout_s <= 0)
    throw Error(ErrorCode::CONFIG_ERROR, "abort timeouts must be > 0");
}

inline void parse_occlusions(const json& j, OcclusionConfig& o) {
  expect_keys(j,
              {"enabled", "rate_per_s", "duration_min_s", "duration_max_s",
               "sector_half_min", "sector_half_max", "school_frac",
               "school_duration_min_s", "school_duration_max_s"},
              "occlusions");
  get(j, "enabled", o.enabled);
  get(j, "rate_per_s", o.rate_per_s);
  get(j, "duration_min_s", o.duration_min_s);
  get(j, "duration_max_s", o.duration_max_s);
  get(j, "sector_half_min", o.sector_half_min);
  get(j, "sector_half_max", o.sector_half_max);
  get(j, "school_frac", o.school_frac);
  get(j, "school_duration_min_s", o.school_duration_min_s);
  get(j, "school_duration_max_s", o.school_duration_max_s);
}

inline void parse_latch(const json& j, LatchState& l) {
  expect_keys(j,
              {"capture_radius_m", "capture_heading_tol_deg", "breakaway_thrust_n"},
              "latch");
  get(j, "capture_radius_m", l.capture_radius_m);
  get_deg(j, "capture_heading_tol_deg", l.capture_heading_tol_rad);
  get(j, "breakaway_thrust_n", l.breakaway_thrust_n);
}

inline void parse_start(const json& j, StartSpec& s) {
  expect_keys(j,
              {"mode", "approach", "jitter_pos_m", "jitter_yaw_deg", "initial_est_err_m",
               "surface_start_ne"},
              "start");
  if (j.contains("mode")) {
    std::string m = j.at("mode").get<std::string>();
    if (m == "NEAR_STATION") s.mode = StartMode::NEAR_STATION;
    else if (m == "SURFACE") s.mode = StartMode::SURFACE;
    else throw Error(ErrorCode::CONFIG_ERROR, "start.mode must be NEAR_STATION|SURFACE");
  }
  if (j.contains("approach")) {
    auto a = approach_from_string(j.at("approach").get<std::string>());
    if (!a) throw Error(ErrorCode::CONFIG_ERROR, "start.approach must be front|left|right");
    s.approach = *a;
  }
  get(j, "jitter_pos_m", s.jitter_pos_m);
  get_deg(j, "jitter_yaw_deg", s.jitter_yaw_rad);
  get(j, "initial_est_err_m", s.initial_est_err_m);
  get(j, "surface_start_ne", s.surface_start_ne);
}

inline void parse_sim(const json& j, SimParams& s) {
  expect_keys(j, {"dt_s", "duration_cap_s", "log_every_n_steps", "log_measurements"},
              "sim");
  get(j, "dt_s", s.dt_s);
  get(j, "duration_cap_s", s.duration_cap_s);
  get(j, "log_every_n_steps", s.log_every_n_steps);
  get(j, "log_measurements", s.log_measurements);
  if (!(s.dt_s > 0.0 && s.dt_s <= 0.1))
    throw Error(ErrorCode::CONFIG_ERROR, "sim.dt_s outside (0, 0.1]");
}

}  // namespace config_detail

inline ScenarioConfig scenario_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir) {
  using namespace config_detail;
  expect_keys(j,
              {"schema_version", "site_profile", "layout_path", "sim", "station",
               "vehicle", "current", "waves", "usbl", "sensor_noise", "marker_noise",
               "camera", "ekf_docking", "ekf_homing", "guidance", "homing", "abort",
               "occlusions", "latch", "start", "mission"},
              "config");
  if (!j.contains("schema_version"))
    throw Error(ErrorCode::SCHEMA_MISMATCH, "config missing schema_version");
  if (j.at("schema_version").get<int>() != kConfigSchemaVersion)
    throw Error(ErrorCode::SCHEMA_MISMATCH, "config schema_version != 1");

  SiteProfile site = SiteProfile::DEEP_90M;
  if (j.contains("site_profile")) {
    std::string s = j.at("site_profile").get<std::string>();
    if (s == "SHALLOW_TBS") site = SiteProfile::SHALLOW_TBS;
    else if (s == "DEEP_90M") site = SiteProfile::DEEP_90M;
    else throw Error(ErrorCode::CONFIG_ERROR, "site_profile must be SHALLOW_TBS|DEEP_90M");
  }
  ScenarioConfig c = default_scenario(site);

  if (!j.contains("layout_path"))
    throw Error(ErrorCode::CONFIG_ERROR, "config missing layout_path");
  std::filesystem::path lp = j.at("layout_path").get<std::string>();
  c.layout_path = lp.is_absolute() ? lp.string() : (base_dir / lp).string();

  if (j.contains("sim")) parse_sim(j.at("sim"), c.sim);
  if (j.contains("station")) {
    expect_keys(j.at("station"), {"world_ne", "depth_m", "yaw_deg"}, "station");
    get(j.at("station"), "world_ne", c.station_world_ne);
    get(j.at("station"), "depth_m", c.station_depth_m);
    get_deg(j.at("station"), "yaw_deg", c.station_yaw_rad);
    c.usbl.station_depth_m = c.station_depth_m;
  }
  if (j.contains("vehicle")) parse_vehicle(j.at("vehicle"), c.vehicle);
  if (j.contains("current")) parse_current(j.at("current"), c.current);
  if (j.contains("waves")) parse_waves(j.at("waves"), c.waves);
  if (j.contains("usbl")) parse_usbl(j.at("usbl"), c.usbl);
  if (j.contains("sensor_noise")) parse_sensor_noise(j.at("sensor_noise"), c.sensor_noise);
  if (j.contains("marker_noise")) parse_marker_noise(j.at("marker_noise"), c.marker_noise);
  if (j.contains("camera")) parse_camera(j.at("camera"), c.camera);
  if (j.contains("ekf_docking")) parse_ekf(j.at("ekf_docking"), c.ekf_docking, "ekf_docking");
  if (j.contains("ekf_homing")) parse_ekf(j.at("ekf_homing"), c.ekf_homing, "ekf_homing");
  if (j.contains("guidance")) {
    const auto& g = j.at("guidance");
    expect_keys(g, {"stand_off_m", "gains", "speeds", "inspection_cruise_mps"},
                "guidance");
    get(g, "stand_off_m", c.stand_off_m);
    get(g, "inspection_cruise_mps", c.inspection_cruise_mps);
    if (g.contains("gains")) parse_gains(g.at("gains"), c.gains);
    if (g.contains("speeds")) parse_speeds(g.at("speeds"), c.speeds);
  }
  if (j.contains("homing")) parse_homing(j.at("homing"), c.homing);
  if (j.contains("abort")) parse_abort(j.at("abort"), c.abort);
  if (j.contains("occlusions")) parse_occlusions(j.at("occlusions"), c.occlusions);
  if (j.contains("latch")) parse_latch(j.at("latch"), c.latch);
  if (j.contains("start")) parse_start(j.at("start"), c.start);
  if (j.contains("mission")) {
    expect_keys(j.at("mission"), {"inspection"}, "mission");
    get(j.at("mission"), "inspection", c.plan.inspection);
  }
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::CONFIG_ERROR, "cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::CONFIG_ERROR, std::string("config parse: ") + e.what());
  }
  return scenario_from_json(j, std::filesystem::path(path).parent_path());
}

/// Canonical digest of the effective configuration, recorded in logs so
/// replays can detect config drift. FNV-1a over the canonical dump.
inline uint64_t config_digest(const nlohmann::json& j) {
  std::string s = j.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace rovdock
