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

#include "rovdock/guidance.hpp"
#include "rovdock/logging.hpp"
#include "rovdock/scenario.hpp"

namespace rovdock {

/// Top-down trajectory plot: station box, waypoints, dashed reference path,
/// truth and estimated tracks, dock marker. East on the x axis, North up.
class TrajectoryPlot {
 public:
  TrajectoryPlot(double width_px = 760, double height_px = 760)
      : w_(width_px), h_(height_px) {}

  void set_bounds(double n_min, double n_max, double e_min, double e_max) {
    double pad_n = 0.1 * (n_max - n_min) + 0.3;
    double pad_e = 0.1 * (e_max - e_min) + 0.3;
    n_min_ = n_min - pad_n;
    n_max_ = n_max + pad_n;
    e_min_ = e_min - pad_e;
    e_max_ = e_max + pad_e;
  }

  void add_station_box(const Eigen::Vector2d& min_ne, const Eigen::Vector2d& max_ne) {
    auto [x0, y0] = to_px(max_ne.x(), min_ne.y());
    auto [x1, y1] = to_px(min_ne.x(), max_ne.y());
    rects_ += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" +
              fmt(x1 - x0) + "\" height=\"" + fmt(y1 - y0) +
              "\" fill=\"#d8d8d8\" stroke=\"#555\"/>\n";
  }

  void add_track(const std::vector<Eigen::Vector2d>& pts_ne, const std::string& color,
                 bool dashed = false) {
    if (pts_ne.empty()) return;
    std::string poly = "<polyline fill=\"none\" stroke=\"" + color +
                       "\" stroke-width=\"1.6\"";
    if (dashed) poly += " stroke-dasharray=\"6 4\"";
    poly += " points=\"";
    for (const auto& p : pts_ne) {
      auto [x, y] = to_px(p.x(), p.y());
      poly += fmt(x) + "," + fmt(y) + " ";
    }
    poly += "\"/>\n";
    lines_ += poly;
  }

  void add_waypoint(const Eigen::Vector2d& ne, const std::string& label) {
    auto [x, y] = to_px(ne.x(), ne.y());
    circles_ += "<circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y) +
                "\" r=\"5\" fill=\"none\" stroke=\"magenta\" stroke-width=\"1.5\">" +
                "<title>" + label + "</title></circle>\n";
  }

  void add_dock_marker(const Eigen::Vector2d& ne) {
    auto [x, y] = to_px(ne.x(), ne.y());
    rects_ += "<rect x=\"" + fmt(x - 4) + "\" y=\"" + fmt(y - 4) +
              "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"red\" "
              "stroke-width=\"1.5\"/>\n";
  }

  std::string render(const std::string& title) const {
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w_) +
                      "\" height=\"" + fmt(h_) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += rects_ + lines_ + circles_;
    svg += "<text x=\"12\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" +
           title + "</text>\n";
    svg += "</svg>\n";
    return svg;
  }

 private:
  std::pair<double, double> to_px(double north, double east) const {
    double x = (east - e_min_) / (e_max_ - e_min_) * w_;
    double y = h_ - (north - n_min_) / (n_max_ - n_min_) * h_;
    return {x, y};
  }

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
  }

  double w_, h_;
  double n_min_ = -5, n_max_ = 5, e_min_ = -5, e_max_ = 5;
  std::string rects_, lines_, circles_;
};

/// Renders one trial log to SVG. The reference path is the dashed polyline
/// through the loop waypoints; tracks show truth and estimate.
inline std::string plot_trial(const ReplayedLog& log, const ScenarioConfig& sc) {
  MarkerLayout layout = load_layout(sc.layout_path);
  Pose t_world_station = sc.station_pose_world();
  Pose t_world_tagstar = compose(t_world_station, layout.t_station_tagstar());

  std::vector<Eigen::Vector2d> truth, est;
  double n_min = 1e18, n_max = -1e18, e_min = 1e18, e_max = -1e18;
  auto grow = [&](double n, double e) {
    n_min = std::min(n_min, n);
    n_max = std::max(n_max, n);
    e_min = std::min(e_min, e);
    e_max = std::max(e_max, e);
  };
  for (const auto& s : log.steps) {
    const auto& tp = s.at("tp");
    const auto& ep = s.at("ep");
    truth.push_back({tp[0].get<double>(), tp[1].get<double>()});
    est.push_back({ep[0].get<double>(), ep[1].get<double>()});
    grow(truth.back().x(), truth.back().y());
    grow(est.back().x(), est.back().y());
  }

  auto [left, right] = build_loops(layout, sc.stand_off_m, sc.speeds);
  std::string approach = log.meta.value("approach", "front");
  const WaypointPath& path = (approach == "left") ? left : right;

  std::vector<Eigen::Vector2d> ref;
  for (const auto& wp : path.waypoints) {
    Pose p_ts = Pose::from_euler(wp.position, 0, 0, 0, FrameId::TAG_STAR);
    Pose p_world = compose(t_world_tagstar, p_ts);
    ref.push_back(p_world.position.head<2>());
    grow(ref.back().x(), ref.back().y());
  }

  TrajectoryPlot plot;
  plot.set_bounds(n_min, n_max, e_min, e_max);
  Eigen::Vector3d bmin_w = t_world_station.transform(layout.station.box_min);
  Eigen::Vector3d bmax_w = t_world_station.transform(layout.station.box_max);
  plot.add_station_box(bmin_w.head<2>().cwiseMin(bmax_w.head<2>()),
                       bmin_w.head<2>().cwiseMax(bmax_w.head<2>()));
  plot.add_track(ref, "#888", /*dashed=*/true);
  plot.add_track(truth, "green");
  plot.add_track(est, "#2060d0");
  for (size_t i = 0; i < path.waypoints.size(); ++i) plot.add_waypoint(ref[i], path.waypoints[i].label);
  Eigen::Vector3d dock_w = t_world_station.transform(layout.station.dock_point);
  plot.add_dock_marker(dock_w.head<2>());

  std::string title = "trial seed=" + std::to_string(log.meta.value("seed", 0)) +
                      " approach=" + approach;
  return plot.render(title);
}

}  // namespace rovdock
