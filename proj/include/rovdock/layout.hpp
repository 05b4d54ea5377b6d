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

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rovdock/geometry.hpp"

namespace rovdock {

constexpr int kLayoutSchemaVersion = 1;

/// Station face a marker is mounted on. FUNNEL_INTERIOR markers sit on the
/// recessed surface behind the entry aperture and are only visible from a
/// narrow frontal cone.
enum class Face { FRONT, LEFT, RIGHT, REAR, FUNNEL_INTERIOR };

inline const char* to_string(Face f) {
  switch (f) {
    case Face::FRONT: return "FRONT";
    case Face::LEFT: return "LEFT";
    case Face::RIGHT: return "RIGHT";
    case Face::REAR: return "REAR";
    case Face::FUNNEL_INTERIOR: return "FUNNEL_INTERIOR";
  }
  return "?";
}

inline std::optional<Face> face_from_string(const std::string& s) {
  if (s == "FRONT") return Face::FRONT;
  if (s == "LEFT") return Face::LEFT;
  if (s == "RIGHT") return Face::RIGHT;
  if (s == "REAR") return Face::REAR;
  if (s == "FUNNEL_INTERIOR") return Face::FUNNEL_INTERIOR;
  return std::nullopt;
}

/// Outward normal of a face in the station frame (x into the station).
inline Eigen::Vector3d face_normal(Face f) {
  switch (f) {
    case Face::FRONT: return {-1, 0, 0};
    case Face::REAR: return {1, 0, 0};
    case Face::LEFT: return {0, -1, 0};
    case Face::RIGHT: return {0, 1, 0};
    case Face::FUNNEL_INTERIOR: return {-1, 0, 0};
  }
  return {-1, 0, 0};
}

/// One square fiducial marker: id, physical edge length, bit-pattern
/// density n (n x n data cells, n+2 with the border) and mounting pose.
struct TagSpec {
  int id = 0;
  double size_m = 0.22;
  int bit_density = 5;
  Pose pose_station = Pose::identity(FrameId::STATION);
  Face face = Face::FRONT;
};

/// Axis-aligned occlusion volume in the station frame (rigging, sensors
/// and other equipment mounted on the frame).
struct OcclusionBox {
  std::string name;
  Eigen::Vector3d box_min{Eigen::Vector3d::Zero()};
  Eigen::Vector3d box_max{Eigen::Vector3d::Zero()};

  /// Segment/box intersection (slab method), used for line-of-sight tests.
  bool intersects_segment(const Eigen::Vector3d& a, const Eigen::Vector3d& b) const {
    Eigen::Vector3d d = b - a;
    double tmin = 0.0, tmax = 1.0;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(d[i]) < 1e-12) {
        if (a[i] < box_min[i] || a[i] > box_max[i]) return false;
      } else {
        double t1 = (box_min[i] - a[i]) / d[i];
        double t2 = (box_max[i] - a[i]) / d[i];
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return false;
      }
    }
    return true;
  }
};

/// Station envelope: 2 m wide, 2 m high, 1 m deep box with a funnel-guided
/// entry on the front face. The station frame origin is the entry center,
/// x points into the station, y starboard, z down.
struct StationGeometry {
  Eigen::Vector3d box_min{0.0, -1.0, -1.0};
  Eigen::Vector3d box_max{1.0, 1.0, 1.0};
  Eigen::Vector3d entry_center{0.0, 0.0, 0.0};
  double entry_width_m = 0.9;
  double entry_height_m = 0.7;
  double funnel_depth_m = 0.6;
  Eigen::Vector3d dock_point{0.55, 0.0, 0.0};
  double dock_yaw_rad = 0.0;

  bool inside_box(const Eigen::Vector3d& p, double margin = 0.0) const {
    return (p.array() >= (box_min.array() - margin)).all() &&
           (p.array() <= (box_max.array() + margin)).all();
  }

  double face_area(Face f) const {
    Eigen::Vector3d ext = box_max - box_min;
    switch (f) {
      case Face::FRONT:
      case Face::REAR: return ext.y() * ext.z();
      case Face::LEFT:
      case Face::RIGHT: return ext.x() * ext.z();
      case Face::FUNNEL_INTERIOR: return entry_width_m * entry_height_m;
    }
    return 1.0;
  }
};

/// The photogrammetry product as data: tag registry + station geometry +
/// static equipment occlusions. Immutable after load.
struct MarkerLayout {
  std::string name;
  StationGeometry station;
  int tag_star_id = 0;
  std::vector<TagSpec> tags;
  std::vector<OcclusionBox> equipment_masks;

  const TagSpec* find(int id) const {
    for (const auto& t : tags)
      if (t.id == id) return &t;
    return nullptr;
  }

  const TagSpec& tag_star() const {
    const TagSpec* t = find(tag_star_id);
    if (!t) throw Error(ErrorCode::INCONSISTENT_LAYOUT, "tag* id not in layout");
    return *t;
  }

  /// Fixed station->tag* transform; the docking navigation frame.
  Pose t_station_tagstar() const {
    Pose p = tag_star().pose_station;
    p.frame = FrameId::STATION;
    return p;
  }

  double tags_per_m2(Face f) const {
    int n = 0;
    for (const auto& t : tags)
      if (t.face == f) ++n;
    return n / station.face_area(f);
  }
};

namespace detail {

inline Eigen::Vector3d vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::VALIDATION_ERROR, "expected 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json vec3_to_json(const Eigen::Vector3d& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where, std::vector<std::string>& violations) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      violations.push_back(where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace detail

inline const std::set<double>& tag_size_palette() {
  static const std::set<double> palette{0.07, 0.15, 0.22, 0.25};
  return palette;
}

/// Collects every violated invariant; empty means the layout is valid.
inline std::vector<std::string> validate(const MarkerLayout& m) {
  std::vector<std::string> v;
  const auto& st = m.station;

  std::set<int> ids;
  for (const auto& t : m.tags) {
    std::string who = "tag " + std::to_string(t.id);
    if (!ids.insert(t.id).second) v.push_back(who + ": duplicate id");
    if (t.id < 0 || t.id > 20) v.push_back(who + ": id outside 0..20");
    if (t.bit_density < 4 || t.bit_density > 7)
      v.push_back(who + ": bit density outside 4..7");
    bool in_palette = false;
    for (double s : tag_size_palette())
      if (std::abs(t.size_m - s) < 1e-9) in_palette = true;
    if (!in_palette) v.push_back(who + ": size not in palette {0.07,0.15,0.22,0.25}");

    // Mounting check: the tag must sit on (within 8 cm of) its face plane
    // and inside the face extent; interior tags inside the funnel envelope.
    const Eigen::Vector3d& p = t.pose_station.position;
    const double tol = 0.08;
    auto on_plane = [&](double coord, double plane) { return std::abs(coord - plane) <= tol; };
    bool ok = false;
    switch (t.face) {
      case Face::FRONT:
        ok = on_plane(p.x(), st.box_min.x()) && p.y() >= st.box_min.y() - tol &&
             p.y() <= st.box_max.y() + tol && p.z() >= st.box_min.z() - tol &&
             p.z() <= st.box_max.z() + tol;
        break;
      case Face::REAR:
        ok = on_plane(p.x(), st.box_max.x()) && p.y() >= st.box_min.y() - tol &&
             p.y() <= st.box_max.y() + tol;
        break;
      case Face::LEFT:
        ok = on_plane(p.y(), st.box_min.y()) && p.x() >= st.box_min.x() - tol &&
             p.x() <= st.box_max.x() + tol;
        break;
      case Face::RIGHT:
        ok = on_plane(p.y(), st.box_max.y()) && p.x() >= st.box_min.x() - tol &&
             p.x() <= st.box_max.x() + tol;
        break;
      case Face::FUNNEL_INTERIOR:
        ok = p.x() >= st.box_min.x() + 0.15 && p.x() <= st.box_max.x() - 0.1 &&
             std::abs(p.y() - st.entry_center.y()) <= st.entry_width_m / 2 + tol &&
             std::abs(p.z() - st.entry_center.z()) <= st.entry_height_m / 2 + tol;
        break;
    }
    if (!ok) v.push_back(who + ": not mounted on its " + to_string(t.face) + " surface");
  }

  if (!m.find(m.tag_star_id))
    v.push_back("tag* id " + std::to_string(m.tag_star_id) + " not present");

  for (Face f : {Face::FRONT, Face::LEFT, Face::RIGHT, Face::REAR}) {
    bool has_large = false;
    for (const auto& t : m.tags)
      if (t.face == f && t.size_m >= 0.22 - 1e-9) has_large = true;
    if (!has_large)
      v.push_back(std::string("face ") + to_string(f) + ": no 0.22 m tag");
  }

  if (!(st.box_max.array() > st.box_min.array()).all())
    v.push_back("station box degenerate");
  return v;
}

inline MarkerLayout layout_from_json(const nlohmann::json& j) {
  std::vector<std::string> violations;
  detail::check_keys(j, {"schema_version", "name", "station", "tag_star_id", "tags",
                         "equipment_masks"},
                     "layout", violations);

  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kLayoutSchemaVersion)
    throw Error(ErrorCode::SCHEMA_MISMATCH, "layout schema_version != 1");

  MarkerLayout m;
  m.name = j.value("name", "");
  const auto& s = j.at("station");
  detail::check_keys(s,
                     {"box_min", "box_max", "entry_center", "entry_width_m",
                      "entry_height_m", "funnel_depth_m", "dock_point", "dock_yaw_rad"},
                     "station", violations);
  m.station.box_min = detail::vec3_from_json(s.at("box_min"));
  m.station.box_max = detail::vec3_from_json(s.at("box_max"));
  m.station.entry_center = detail::vec3_from_json(s.at("entry_center"));
  m.station.entry_width_m = s.at("entry_width_m").get<double>();
  m.station.entry_height_m = s.at("entry_height_m").get<double>();
  m.station.funnel_depth_m = s.at("funnel_depth_m").get<double>();
  m.station.dock_point = detail::vec3_from_json(s.at("dock_point"));
  m.station.dock_yaw_rad = s.at("dock_yaw_rad").get<double>();
  m.tag_star_id = j.at("tag_star_id").get<int>();

  for (const auto& tj : j.at("tags")) {
    detail::check_keys(tj, {"id", "size_m", "bit_density", "position", "orientation_wxyz", "face"},
                       "tag", violations);
    TagSpec t;
    t.id = tj.at("id").get<int>();
    t.size_m = tj.at("size_m").get<double>();
    t.bit_density = tj.at("bit_density").get<int>();
    t.pose_station.position = detail::vec3_from_json(tj.at("position"));
    const auto& q = tj.at("orientation_wxyz");
    Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                            q[3].get<double>());
    if (quat.norm() < 1e-9) {
      violations.push_back("tag " + std::to_string(t.id) + ": zero quaternion");
      quat = Eigen::Quaterniond::Identity();
    }
    t.pose_station.orientation = quat.normalized();
    t.pose_station.frame = FrameId::STATION;
    auto f = face_from_string(tj.at("face").get<std::string>());
    if (!f) {
      violations.push_back("tag " + std::to_string(t.id) + ": bad face");
      f = Face::FRONT;
    }
    t.face = *f;
    m.tags.push_back(t);
  }

  if (j.contains("equipment_masks")) {
    for (const auto& ej : j["equipment_masks"]) {
      detail::check_keys(ej, {"name", "box_min", "box_max"}, "mask", violations);
      OcclusionBox b;
      b.name = ej.value("name", "");
      b.box_min = detail::vec3_from_json(ej.at("box_min"));
      b.box_max = detail::vec3_from_json(ej.at("box_max"));
      m.equipment_masks.push_back(b);
    }
  }

  auto more = validate(m);
  violations.insert(violations.end(), more.begin(), more.end());
  if (!violations.empty()) {
    std::ostringstream oss;
    oss << "layout invalid (" << violations.size() << " violations):";
    for (const auto& s2 : violations) oss << "\n  - " << s2;
    throw Error(ErrorCode::VALIDATION_ERROR, oss.str());
  }
  std::sort(m.tags.begin(), m.tags.end(),
            [](const TagSpec& a, const TagSpec& b) { return a.id < b.id; });
  return m;
}

inline nlohmann::json layout_to_json(const MarkerLayout& m) {
  nlohmann::json j;
  j["schema_version"] = kLayoutSchemaVersion;
  j["name"] = m.name;
  j["station"] = {{"box_min", detail::vec3_to_json(m.station.box_min)},
                  {"box_max", detail::vec3_to_json(m.station.box_max)},
                  {"entry_center", detail::vec3_to_json(m.station.entry_center)},
                  {"entry_width_m", m.station.entry_width_m},
                  {"entry_height_m", m.station.entry_height_m},
                  {"funnel_depth_m", m.station.funnel_depth_m},
                  {"dock_point", detail::vec3_to_json(m.station.dock_point)},
                  {"dock_yaw_rad", m.station.dock_yaw_rad}};
  j["tag_star_id"] = m.tag_star_id;
  j["tags"] = nlohmann::json::array();
  for (const auto& t : m.tags) {
    Eigen::Quaterniond q = t.pose_station.orientation.normalized();
    if (q.w() < 0) q.coeffs() *= -1.0;  // canonical sign
    j["tags"].push_back({{"id", t.id},
                         {"size_m", t.size_m},
                         {"bit_density", t.bit_density},
                         {"position", detail::vec3_to_json(t.pose_station.position)},
                         {"orientation_wxyz",
                          nlohmann::json::array({q.w(), q.x(), q.y(), q.z()})},
                         {"face", to_string(t.face)}});
  }
  j["equipment_masks"] = nlohmann::json::array();
  for (const auto& b : m.equipment_masks) {
    j["equipment_masks"].push_back({{"name", b.name},
                                    {"box_min", detail::vec3_to_json(b.box_min)},
                                    {"box_max", detail::vec3_to_json(b.box_max)}});
  }
  return j;
}

inline MarkerLayout load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::VALIDATION_ERROR, "cannot open layout: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::VALIDATION_ERROR, std::string("layout parse: ") + e.what());
  }
  return layout_from_json(j);
}

}  // namespace rovdock
