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

#include "rovdock/sensors.hpp"

namespace rovdock {

/// Camera pose on a survey path, tagged with the station region it covers.
struct SurveyPose {
  Pose camera_pose_station;
  std::string segment;  // "front", "right", "rear", "left"
};

/// Camera pose at a station-frame position looking along `heading`
/// (station-frame yaw), level.
inline Pose survey_camera_pose(const Eigen::Vector3d& pos_station, double heading,
                               const CameraModel& cam) {
  Pose body = Pose::from_euler(pos_station, 0.0, 0.0, heading, FrameId::STATION);
  Pose out = compose(body, cam.t_body_camera);
  out.frame = FrameId::STATION;
  return out;
}

/// A manually-flown style loop around the station at the entry depth:
/// a close frontal pass (including the front-exit pose), then lateral and
/// rear passes at roughly constant clearance, camera on the station.
inline std::vector<SurveyPose> build_survey_path(const MarkerLayout& layout,
                                                 const CameraModel& cam,
                                                 double clearance_m = 1.3,
                                                 double spacing_m = 0.25) {
  const StationGeometry& st = layout.station;
  std::vector<SurveyPose> path;
  double z = st.entry_center.z();
  double front_x = st.box_min.x() - clearance_m;
  double rear_x = st.box_max.x() + clearance_m;
  double right_y = st.box_max.y() + clearance_m;
  double left_y = st.box_min.y() - clearance_m;

  auto add_line = [&](Eigen::Vector3d a, Eigen::Vector3d b, double heading,
                      const std::string& seg) {
    int n = std::max(1, static_cast<int>((b - a).norm() / spacing_m));
    for (int i = 0; i <= n; ++i) {
      Eigen::Vector3d p = a + (b - a) * (static_cast<double>(i) / n);
      path.push_back({survey_camera_pose(p, heading, cam), seg});
    }
  };

  // Front pass, heading into the station, with a spur along the exit axis
  // down to the entry (the viewpoint right after undocking).
  add_line({front_x, left_y + 0.3, z}, {front_x, st.entry_center.y(), z}, 0.0, "front");
  add_line({front_x, st.entry_center.y(), z},
           {st.box_min.x() - 0.9, st.entry_center.y(), z}, 0.0, "front");
  add_line({st.box_min.x() - 0.9, st.entry_center.y(), z},
           {front_x, st.entry_center.y(), z}, 0.0, "front");
  add_line({front_x, st.entry_center.y(), z}, {front_x, right_y - 0.3, z}, 0.0, "front");
  // Right side, camera facing the right face.
  add_line({front_x, right_y, z}, {rear_x, right_y, z}, -M_PI / 2, "right");
  // Rear pass, facing the rear face.
  add_line({rear_x, right_y - 0.3, z}, {rear_x, left_y + 0.3, z}, M_PI, "rear");
  // Left side.
  add_line({rear_x, left_y, z}, {front_x, left_y, z}, M_PI / 2, "left");
  return path;
}

struct CoveragePoint {
  Pose camera_pose_station;
  std::string segment;
  int detections = 0;
};

/// Noise-free detection counts along a path of camera poses. Deterministic:
/// repeated calls give identical results.
inline std::vector<CoveragePoint> coverage_map(const std::vector<SurveyPose>& path,
                                               const MarkerLayout& layout,
                                               const CameraModel& cam) {
  ActiveOcclusions occ;
  occ.equipment = &layout.equipment_masks;
  std::vector<CoveragePoint> out;
  out.reserve(path.size());
  for (const auto& sp : path) {
    CoveragePoint p;
    p.camera_pose_station = sp.camera_pose_station;
    p.segment = sp.segment;
    p.detections = count_visible(layout, sp.camera_pose_station, cam, occ);
    out.push_back(p);
  }
  return out;
}

inline double segment_mean(const std::vector<CoveragePoint>& cov,
                           const std::string& segment) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : cov)
    if (p.segment == segment) {
      sum += p.detections;
      ++n;
    }
  return n ? sum / n : 0.0;
}

inline int max_detections(const std::vector<CoveragePoint>& cov) {
  int best = 0;
  for (const auto& p : cov) best = std::max(best, p.detections);
  return best;
}

// ---------------------------------------------------------------------------
// Bit-pattern design study
// ---------------------------------------------------------------------------

struct BitPatternResult {
  int density = 5;
  double max_range_m = 0.0;       // decode-robustness adjusted
  double detection_rate = 0.0;    // fraction of approach poses with detection
  double max_view_angle_deg = 0.0;
};

struct BitPatternReport {
  std::vector<BitPatternResult> results;  // one per density
  int best_rate_density = 5;
  int widest_angle_density = 4;

  const BitPatternResult& at(int density) const {
    for (const auto& r : results)
      if (r.density == density) return r;
    throw Error(ErrorCode::VALIDATION_ERROR, "density not in report");
  }
};

/// Single-tag frontal-approach study across bit densities, with consistent
/// poses across iterations. The effective range applies the per-dictionary
/// decode factor on top of the pinhole/attenuation limit; sparser patterns
/// tolerate oblique views but decode less reliably at distance.
inline BitPatternReport compare_bit_patterns(double tag_size_m,
                                             const std::vector<int>& densities,
                                             const CameraModel& cam) {
  BitPatternReport report;

  // Frontal approach path: straight run-in from 8 m to 0.4 m with a gentle
  // lateral weave, the tag at the origin facing the approach direction.
  std::vector<Eigen::Vector3d> approach;
  for (int i = 0; i <= 160; ++i) {
    double s = i / 160.0;
    double range = 8.0 - 7.6 * s;
    double lateral = 0.8 * std::sin(s * 4.0 * M_PI);
    approach.push_back({-range, lateral, 0.0});
  }

  double best_rate = -1.0, widest = -1.0;
  for (int n : densities) {
    if (n < 4 || n > 7)
      throw Error(ErrorCode::VALIDATION_ERROR, "bit density outside 4..7");
    TagSpec tag;
    tag.id = 0;
    tag.size_m = tag_size_m;
    tag.bit_density = n;
    tag.face = Face::FRONT;
    tag.pose_station.position = Eigen::Vector3d::Zero();

    double factor = cam.dict_range_factor.count(n) ? cam.dict_range_factor.at(n) : 1.0;
    BitPatternResult r;
    r.density = n;
    r.max_range_m = factor * max_detection_range(tag, cam);
    r.max_view_angle_deg = cam.max_view_angle_rad.at(n) * 180.0 / M_PI;

    int detected = 0;
    ActiveOcclusions no_occ;
    for (const auto& p : approach) {
      Pose cam_pose = survey_camera_pose(p, 0.0, cam);
      Eigen::Vector3d p_cam = invert(cam_pose).transform(tag.pose_station.position);
      if (p_cam.z() < 0.05) continue;
      if (std::abs(std::atan2(p_cam.x(), p_cam.z())) > cam.hfov_rad / 2) continue;
      if (std::abs(std::atan2(p_cam.y(), p_cam.z())) > cam.vfov_rad / 2) continue;
      if (p_cam.norm() > r.max_range_m) continue;
      Eigen::Vector3d to_cam = cam_pose.position - tag.pose_station.position;
      double cosv = face_normal(tag.face).dot(to_cam) / to_cam.norm();
      if (cosv < std::cos(cam.max_view_angle_rad.at(n))) continue;
      ++detected;
    }
    r.detection_rate = static_cast<double>(detected) / approach.size();

    if (r.detection_rate > best_rate) {
      best_rate = r.detection_rate;
      report.best_rate_density = n;
    }
    if (r.max_view_angle_deg > widest) {
      widest = r.max_view_angle_deg;
      report.widest_angle_density = n;
    }
    report.results.push_back(r);
  }
  return report;
}

}  // namespace rovdock
