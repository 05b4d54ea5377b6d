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

#include <map>
#include <optional>
#include <random>
#include <vector>

#include "rovdock/layout.hpp"
#include "rovdock/vehicle.hpp"

namespace rovdock {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// USBL
// ---------------------------------------------------------------------------

/// Relative horizontal offset measured by the station-side transducer.
/// Deliberately carries no depth component: the acoustic water column makes
/// USBL depth unusable at this site.
struct UsblFix {
  double north_offset_m = 0.0;  // station -> vehicle
  double east_offset_m = 0.0;
  double t = 0.0;
  bool valid = true;
};

struct UsblParams {
  double ping_period_s = 2.0;
  double sigma_m = 0.5;
  double dropout_prob = 0.1;
  double cone_surface_diameter_m = 100.0;
  double station_depth_m = 90.0;

  double cone_half_angle_rad() const {
    return std::atan2(cone_surface_diameter_m / 2.0, station_depth_m);
  }
};

/// Samples one ping epoch. Absence (outside the cone, or dropout) is the
/// signal; there is no invalid-fix object in the stream.
inline std::optional<UsblFix> sample_usbl(const Eigen::Vector3d& vehicle_world,
                                          const Eigen::Vector3d& station_world,
                                          const UsblParams& p, double t, Rng& rng) {
  double height = station_world.z() - vehicle_world.z();
  if (height <= 0.0) return std::nullopt;
  double allowed = height * std::tan(p.cone_half_angle_rad());
  Eigen::Vector2d offset = (vehicle_world - station_world).head<2>();
  if (offset.norm() > allowed) return std::nullopt;
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p.dropout_prob)
    return std::nullopt;
  std::normal_distribution<double> n(0.0, p.sigma_m);
  UsblFix fix;
  fix.north_offset_m = offset.x() + n(rng);
  fix.east_offset_m = offset.y() + n(rng);
  fix.t = t;
  return fix;
}

// ---------------------------------------------------------------------------
// Camera / marker detection (geometric model, no pixel decoding)
// ---------------------------------------------------------------------------

struct CameraModel {
  double hfov_rad = 97.0 * M_PI / 180.0;
  double vfov_rad = 74.0 * M_PI / 180.0;
  int image_width_px = 1280;
  double min_cell_px = 4.0;
  /// Water visibility limit on detection range (smaller at the unlit site).
  double attenuation_length_m = 8.0;
  /// Max viewing angle (from the tag's outward normal) per bit density.
  /// Sparser patterns decode at more oblique angles.
  std::map<int, double> max_view_angle_rad{
      {4, 70.0 * M_PI / 180.0},
      {5, 56.0 * M_PI / 180.0},
      {6, 52.0 * M_PI / 180.0},
      {7, 48.0 * M_PI / 180.0}};
  /// Recessed funnel-interior tags are only visible through the aperture.
  double funnel_interior_view_limit_rad = 35.0 * M_PI / 180.0;
  /// Empirical decode robustness per dictionary, applied by the bit-pattern
  /// study on top of the pinhole/attenuation limit.
  std::map<int, double> dict_range_factor{{4, 0.80}, {5, 1.0}, {6, 0.95}, {7, 0.90}};
  /// Camera mount: forward-looking, optical z along body x.
  Pose t_body_camera = []() {
    Pose p;
    p.position = {0.1, 0.0, 0.0};
    Eigen::Matrix3d r;
    r.col(0) = Eigen::Vector3d(0, 1, 0);   // camera x -> body y
    r.col(1) = Eigen::Vector3d(0, 0, 1);   // camera y -> body z
    r.col(2) = Eigen::Vector3d(1, 0, 0);   // camera z -> body x
    p.orientation = Eigen::Quaterniond(r);
    p.frame = FrameId::BODY;
    return p;
  }();

  double focal_px() const {
    return (image_width_px / 2.0) / std::tan(hfov_rad / 2.0);
  }
};

/// Pinhole-limited range: the tag must project at least `min_cell_px` pixels
/// per pattern cell (n+2 cells across including the border), capped by the
/// water attenuation length. Goes to zero with tag size.
inline double max_detection_range(const TagSpec& tag, const CameraModel& cam) {
  double cell_m = tag.size_m / (tag.bit_density + 2);
  double pinhole = cell_m * cam.focal_px() / cam.min_cell_px;
  return std::min(pinhole, cam.attenuation_length_m);
}

/// Poisson-arriving occlusion window: a fish (or school) crossing the view,
/// covering a horizontal sector of the image for its duration.
struct FishEvent {
  double t_start = 0.0;
  double duration_s = 0.0;
  double sector_center = 0.5;      // normalized image x in [0,1]
  double sector_half_width = 0.5;  // fraction of image width
};

struct OcclusionConfig {
  bool enabled = false;
  double rate_per_s = 0.02;
  double duration_min_s = 1.0;
  double duration_max_s = 3.0;
  double sector_half_min = 0.15;
  double sector_half_max = 0.55;
  /// Fraction of events that are lingering schools rather than brief passes.
  double school_frac = 0.0;
  double school_duration_min_s = 8.0;
  double school_duration_max_s = 14.0;
};

struct OcclusionSchedule {
  std::vector<FishEvent> events;
};

/// Draws the whole trial's fish schedule up front so that matched-seed
/// scenario variants share identical occlusion timing.
inline OcclusionSchedule draw_fish_schedule(const OcclusionConfig& cfg, double duration_s,
                                            Rng& rng) {
  OcclusionSchedule s;
  if (!cfg.enabled || cfg.rate_per_s <= 0.0) return s;
  std::exponential_distribution<double> gap(cfg.rate_per_s);
  std::uniform_real_distribution<double> dur(cfg.duration_min_s, cfg.duration_max_s);
  std::uniform_real_distribution<double> school_dur(cfg.school_duration_min_s,
                                                    cfg.school_duration_max_s);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> center(0.0, 1.0);
  std::uniform_real_distribution<double> width(cfg.sector_half_min, cfg.sector_half_max);
  double t = gap(rng);
  while (t < duration_s) {
    FishEvent e;
    e.t_start = t;
    bool school = u01(rng) < cfg.school_frac;
    e.duration_s = school ? school_dur(rng) : dur(rng);
    e.sector_center = center(rng);
    e.sector_half_width = width(rng);
    s.events.push_back(e);
    t += gap(rng);
  }
  return s;
}

/// Occlusions in effect at one instant: static equipment volumes plus the
/// image sectors covered by active fish events.
struct ActiveOcclusions {
  const std::vector<OcclusionBox>* equipment = nullptr;
  std::vector<std::pair<double, double>> fish_sectors;  // normalized image x

  static ActiveOcclusions at(const OcclusionSchedule& sched, const MarkerLayout& layout,
                             double t) {
    ActiveOcclusions a;
    a.equipment = &layout.equipment_masks;
    for (const auto& e : sched.events) {
      if (t >= e.t_start && t <= e.t_start + e.duration_s)
        a.fish_sectors.emplace_back(e.sector_center - e.sector_half_width,
                                    e.sector_center + e.sector_half_width);
    }
    return a;
  }
};

/// Visibility predicate: frustum, range, viewing angle, occlusions.
/// Monotone in every gate; removing occlusions or shortening the range can
/// only clear tags, never hide more of them.
inline bool visible(const TagSpec& tag, const Pose& camera_pose_station,
                    const CameraModel& cam, const ActiveOcclusions& occ) {
  require_frame(camera_pose_station, FrameId::STATION, "visible");
  Eigen::Vector3d p_cam = invert(camera_pose_station).transform(tag.pose_station.position);
  if (p_cam.z() < 0.05) return false;
  double bearing = std::atan2(p_cam.x(), p_cam.z());
  double elevation = std::atan2(p_cam.y(), p_cam.z());
  if (std::abs(bearing) > cam.hfov_rad / 2.0) return false;
  if (std::abs(elevation) > cam.vfov_rad / 2.0) return false;

  double range = p_cam.norm();
  if (range > max_detection_range(tag, cam)) return false;

  Eigen::Vector3d to_cam = camera_pose_station.position - tag.pose_station.position;
  double cos_view = face_normal(tag.face).dot(to_cam) / std::max(range, 1e-9);
  double limit = cam.max_view_angle_rad.count(tag.bit_density)
                     ? cam.max_view_angle_rad.at(tag.bit_density)
                     : 60.0 * M_PI / 180.0;
  if (tag.face == Face::FUNNEL_INTERIOR)
    limit = std::min(limit, cam.funnel_interior_view_limit_rad);
  if (cos_view < std::cos(limit)) return false;

  // Fish sectors cover a horizontal band of the image.
  double u = 0.5 + 0.5 * bearing / (cam.hfov_rad / 2.0);
  for (const auto& [lo, hi] : occ.fish_sectors)
    if (u >= lo && u <= hi) return false;

  // Static equipment: line of sight from camera to tag, endpoint pulled a
  // few cm off the mounting surface so flush tags do not self-occlude.
  if (occ.equipment) {
    Eigen::Vector3d tag_pt =
        tag.pose_station.position + 0.03 * face_normal(tag.face);
    for (const auto& box : *occ.equipment)
      if (box.intersects_segment(camera_pose_station.position, tag_pt)) return false;
  }
  return true;
}

inline int count_visible(const MarkerLayout& layout, const Pose& camera_pose_station,
                         const CameraModel& cam, const ActiveOcclusions& occ) {
  int n = 0;
  for (const auto& tag : layout.tags)
    if (visible(tag, camera_pose_station, cam, occ)) ++n;
  return n;
}

/// One decoded marker: tag id, camera->tag relative pose and a pixel-scale
/// quality in (0,1] (cell size in pixels against the decode minimum).
struct MarkerDetection {
  int tag_id = -1;
  Pose t_camera_tag = Pose::identity(FrameId::CAMERA);
  double quality = 1.0;
};

struct MarkerNoise {
  double pos_base_m = 0.004;
  double ang_base_rad = 0.004;
  double range_ref_m = 1.0;  // noise grows with (range/range_ref)^2
};

inline double detection_pos_sigma(const MarkerNoise& n, double range, double quality) {
  double r2 = (range / n.range_ref_m) * (range / n.range_ref_m);
  return n.pos_base_m * (1.0 + r2) / std::sqrt(std::max(quality, 1e-3));
}

inline double detection_ang_sigma(const MarkerNoise& n, double range, double quality) {
  double r2 = (range / n.range_ref_m) * (range / n.range_ref_m);
  return n.ang_base_rad * (1.0 + r2) / std::sqrt(std::max(quality, 1e-3));
}

/// One detection per visible tag, with range/quality-scaled pose noise.
/// Tags are scanned in id order so the RNG stream is reproducible.
inline std::vector<MarkerDetection> detect_markers(const Pose& camera_pose_station,
                                                   const MarkerLayout& layout,
                                                   const CameraModel& cam,
                                                   const ActiveOcclusions& occ,
                                                   const MarkerNoise& noise, Rng& rng) {
  std::vector<MarkerDetection> out;
  Pose t_cam_station = invert(camera_pose_station);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (const auto& tag : layout.tags) {
    if (!visible(tag, camera_pose_station, cam, occ)) continue;
    MarkerDetection d;
    d.tag_id = tag.id;
    Pose rel = compose(t_cam_station, tag.pose_station);
    rel.frame = FrameId::CAMERA;
    double range = rel.position.norm();
    double cell_px = cam.focal_px() * (tag.size_m / (tag.bit_density + 2)) /
                     std::max(range, 1e-6);
    d.quality = std::clamp(cell_px / (4.0 * cam.min_cell_px), 1e-3, 1.0);

    double sp = detection_pos_sigma(noise, range, d.quality);
    double sa = detection_ang_sigma(noise, range, d.quality);
    if (sp > 0.0) {
      rel.position += Eigen::Vector3d(sp * n01(rng), sp * n01(rng), sp * n01(rng));
      Eigen::Vector3d rot(sa * n01(rng), sa * n01(rng), sa * n01(rng));
      double ang = rot.norm();
      if (ang > 1e-12)
        rel.orientation = (Eigen::Quaterniond(Eigen::AngleAxisd(ang, rot / ang)) *
                           rel.orientation)
                              .normalized();
    }
    d.t_camera_tag = rel;
    out.push_back(d);
  }
  return out;
}

/// Fuses per-tag body-in-tag* estimates by inverse-variance weighting
/// (variance grows with range^2). Orientation uses the weighted quaternion
/// eigen-average. Returns the fused pose and a diagonal 6x6 covariance
/// ordered (x, y, z, roll, pitch, yaw).
inline std::optional<std::pair<Pose, Eigen::Matrix<double, 6, 6>>> pose_from_detections(
    const std::vector<MarkerDetection>& detections, const MarkerLayout& layout,
    const CameraModel& cam, const MarkerNoise& noise) {
  if (detections.empty()) return std::nullopt;

  Pose t_tagstar_station = invert(layout.t_station_tagstar());
  Pose t_camera_body = invert(cam.t_body_camera);

  Eigen::Vector3d pos_acc = Eigen::Vector3d::Zero();
  Eigen::Matrix4d quat_acc = Eigen::Matrix4d::Zero();
  double wsum_pos = 0.0, wsum_ang = 0.0;

  for (const auto& d : detections) {
    const TagSpec* tag = layout.find(d.tag_id);
    if (!tag)
      throw Error(ErrorCode::INCONSISTENT_LAYOUT,
                  "detection of unknown tag id " + std::to_string(d.tag_id));
    Pose t_station_camera = compose(tag->pose_station, invert(d.t_camera_tag));
    Pose t_station_body = compose(t_station_camera, t_camera_body);
    Pose t_tagstar_body = compose(t_tagstar_station, t_station_body);

    double range = d.t_camera_tag.position.norm();
    double sp = std::max(detection_pos_sigma(noise, range, d.quality), 1e-6);
    double sa = std::max(detection_ang_sigma(noise, range, d.quality), 1e-6);
    double wp = 1.0 / (sp * sp), wa = 1.0 / (sa * sa);

    pos_acc += wp * t_tagstar_body.position;
    wsum_pos += wp;
    Eigen::Vector4d q = t_tagstar_body.orientation.coeffs();  // x y z w
    quat_acc += wa * (q * q.transpose());
    wsum_ang += wa;
  }

  Pose fused;
  fused.frame = FrameId::TAG_STAR;
  fused.position = pos_acc / wsum_pos;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(quat_acc);
  Eigen::Vector4d qv = eig.eigenvectors().col(3);  // largest eigenvalue
  fused.orientation = Eigen::Quaterniond(qv(3), qv(0), qv(1), qv(2)).normalized();

  Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Zero();
  cov.topLeftCorner<3, 3>() = (1.0 / wsum_pos) * Eigen::Matrix3d::Identity();
  cov.bottomRightCorner<3, 3>() = (1.0 / wsum_ang) * Eigen::Matrix3d::Identity();
  return std::make_pair(fused, cov);
}

// ---------------------------------------------------------------------------
// IMU / DVL / depth
// ---------------------------------------------------------------------------

struct SensorNoise {
  double dvl_sigma_mps = 0.02;
  double gyro_sigma_rps = 0.005;
  double accel_sigma_mps2 = 0.05;
  double compass_sigma_rad = 2.0 * M_PI / 180.0;
  bool compass_drift_enabled = false;
  /// Random-walk intensity; at 0.5 deg/min the bias std after one minute
  /// is 0.5 deg, mirroring the magnetic interference near the structure.
  double compass_drift_deg_per_min = 0.5;
  double depth_sigma_m = 0.05;
};

struct ImuMeasurement {
  Eigen::Vector3d rates{Eigen::Vector3d::Zero()};
  Eigen::Vector3d accel{Eigen::Vector3d::Zero()};
  std::optional<double> heading;
};

struct DvlMeasurement {
  Eigen::Vector3d vel_body{Eigen::Vector3d::Zero()};
};

struct DepthMeasurement {
  double z = 0.0;
};

/// Compass drift bias as a slow random walk; owned per trial.
class CompassDrift {
 public:
  void step(const SensorNoise& n, double dt, Rng& rng) {
    if (!n.compass_drift_enabled) return;
    double sigma_per_sqrt_s = (n.compass_drift_deg_per_min * M_PI / 180.0) / std::sqrt(60.0);
    bias_ += sigma_per_sqrt_s * std::sqrt(dt) * std::normal_distribution<double>(0, 1)(rng);
  }
  double bias() const { return bias_; }

 private:
  double bias_ = 0.0;
};

inline ImuMeasurement sample_imu(const VehicleState& truth, const SensorNoise& n,
                                 const CompassDrift& drift, bool with_heading, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  ImuMeasurement m;
  m.rates = Eigen::Vector3d(0.0, 0.0, truth.yaw_rate) +
            n.gyro_sigma_rps * Eigen::Vector3d(n01(rng), n01(rng), n01(rng));
  m.accel = truth.accel_body +
            n.accel_sigma_mps2 * Eigen::Vector3d(n01(rng), n01(rng), n01(rng));
  if (with_heading)
    m.heading = wrap_angle(truth.yaw + drift.bias() + n.compass_sigma_rad * n01(rng));
  return m;
}

inline DvlMeasurement sample_dvl(const VehicleState& truth, const SensorNoise& n, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  DvlMeasurement m;
  m.vel_body = truth.vel_body +
               n.dvl_sigma_mps * Eigen::Vector3d(n01(rng), n01(rng), n01(rng));
  return m;
}

inline DepthMeasurement sample_depth(const VehicleState& truth, const SensorNoise& n,
                                     Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  return {truth.position.z() + n.depth_sigma_m * n01(rng)};
}

/// Camera pose in the station frame for a given truth pose.
inline Pose camera_pose_station(const Pose& vehicle_pose_world, const Pose& t_world_station,
                                const CameraModel& cam) {
  Pose t_station_body = compose(invert(t_world_station), vehicle_pose_world);
  Pose out = compose(t_station_body, cam.t_body_camera);
  out.frame = FrameId::STATION;
  return out;
}

}  // namespace rovdock
