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

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rovdock/coverage.hpp"
#include "rovdock/harness.hpp"
#include "rovdock/plot.hpp"

namespace fs = std::filesystem;
using namespace rovdock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTrialFailures = 1;
constexpr int kExitConfigError = 2;

std::vector<Approach> parse_approaches(const std::string& csv) {
  std::vector<Approach> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto a = approach_from_string(item);
    if (!a) throw Error(ErrorCode::CONFIG_ERROR, "bad approach '" + item + "'");
    out.push_back(*a);
  }
  if (out.empty()) throw Error(ErrorCode::CONFIG_ERROR, "no approaches given");
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::CONFIG_ERROR, "cannot write " + path.string());
  out << content;
}

int cmd_run(const std::string& config_path, uint64_t seed,
            const std::string& approach_str, const std::string& out_dir) {
  ScenarioConfig sc = load_scenario(config_path);
  if (!approach_str.empty()) {
    auto a = approach_from_string(approach_str);
    if (!a) throw Error(ErrorCode::CONFIG_ERROR, "bad approach '" + approach_str + "'");
    sc.start.approach = *a;
  }
  fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);
  fs::path log_path = dir / ("trial_" + std::string(to_string(sc.start.approach)) +
                             "_seed" + std::to_string(seed) + ".jsonl");
  std::ofstream log_file(log_path, std::ios::binary);
  JsonlLogger logger(&log_file);
  TrialResult r = run_mission(sc, seed, &logger);

  std::cout << "trial: approach=" << to_string(r.approach) << " seed=" << r.seed
            << " success=" << (r.success ? "yes" : "no");
  if (r.success) std::cout << " duration=" << r.duration_s << " s";
  if (r.abort_reason) std::cout << " reason=" << *r.abort_reason;
  std::cout << "\nlog: " << log_path.string() << "\n";
  return r.success ? kExitOk : kExitTrialFailures;
}

int cmd_batch(const std::string& config_path, uint64_t base_seed, int n_seeds,
              const std::string& approaches_csv, const std::string& out_dir,
              const std::string& format, int jobs, double standoff_delta) {
  ScenarioConfig sc = load_scenario(config_path);
  sc.stand_off_m += standoff_delta;
  std::vector<Approach> approaches = parse_approaches(approaches_csv);

  BatchOutput out = run_batch(sc, approaches, n_seeds, base_seed, jobs);

  fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);
  write_file(dir / "batch.jsonl", out.log_text);
  if (format == "csv")
    write_file(dir / "summary.csv", results_to_csv(out.results));
  write_file(dir / "summary.json", summary_to_json(out.summary).dump(2) + "\n");

  std::cout << summary_to_json(out.summary).dump(2) << "\n";
  return out.summary.successes == out.summary.trials ? kExitOk : kExitTrialFailures;
}

int cmd_analyze(const std::string& log_path, const std::string& format) {
  ReplayedLog log = replay_log_file(log_path);
  BatchSummary s = summarize_log(log);
  if (format == "csv") {
    std::cout << "approach,trials,successes,mean_duration_s\n";
    for (const auto& [ap, st] : s.per_approach)
      std::cout << to_string(ap) << ',' << st.trials << ',' << st.successes << ','
                << st.mean_duration_s << "\n";
  } else {
    std::cout << summary_to_json(s).dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_layout_check(const std::string& layout_path, const std::string& out_dir) {
  MarkerLayout layout = load_layout(layout_path);
  std::cout << "layout '" << layout.name << "': " << layout.tags.size()
            << " tags, tag*=" << layout.tag_star_id << ", "
            << layout.equipment_masks.size() << " equipment masks -- valid\n";

  CameraModel cam;
  auto path = build_survey_path(layout, cam);
  auto cov = coverage_map(path, layout, cam);
  std::cout << "coverage: max=" << max_detections(cov)
            << " front_mean=" << segment_mean(cov, "front")
            << " rear_mean=" << segment_mean(cov, "rear") << "\n";

  if (!out_dir.empty()) {
    std::ostringstream csv;
    csv << "segment,x,y,z,detections\n";
    for (const auto& p : cov) {
      const auto& pos = p.camera_pose_station.position;
      csv << p.segment << ',' << pos.x() << ',' << pos.y() << ',' << pos.z() << ','
          << p.detections << "\n";
    }
    write_file(fs::path(out_dir) / "coverage.csv", csv.str());
    std::cout << "wrote " << (fs::path(out_dir) / "coverage.csv").string() << "\n";
  }
  return kExitOk;
}

int cmd_bitpattern(double size_m, const std::string& out_dir) {
  CameraModel cam;
  BitPatternReport report = compare_bit_patterns(size_m, {4, 5, 6, 7}, cam);
  nlohmann::json j;
  for (const auto& r : report.results)
    j["densities"][std::to_string(r.density)] = {
        {"max_range_m", r.max_range_m},
        {"detection_rate", r.detection_rate},
        {"max_view_angle_deg", r.max_view_angle_deg}};
  j["best_rate_density"] = report.best_rate_density;
  j["widest_angle_density"] = report.widest_angle_density;
  std::cout << j.dump(2) << "\n";
  if (!out_dir.empty())
    write_file(fs::path(out_dir) / "bitpattern.json", j.dump(2) + "\n");
  return kExitOk;
}

int cmd_replay(const std::string& log_path) {
  ReplayedLog log = replay_log_file(log_path);
  std::cout << "log ok: " << log.steps.size() << " steps, " << log.phases.size()
            << " phase events, " << log.waypoints.size() << " waypoint events, "
            << log.results.size() << " results\n";
  for (const auto& r : log.results) {
    std::cout << "  seed=" << r.at("seed") << " approach=" << r.at("approach")
              << " success=" << r.at("success") << "\n";
  }
  return kExitOk;
}

int cmd_plot(const std::string& log_path, const std::string& config_path,
             const std::string& out_dir) {
  ReplayedLog log = replay_log_file(log_path);
  ScenarioConfig sc = load_scenario(config_path);
  std::string svg = plot_trial(log, sc);
  fs::path out = fs::path(out_dir.empty() ? "." : out_dir) /
                 (fs::path(log_path).stem().string() + ".svg");
  write_file(out, svg);
  std::cout << "wrote " << out.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"resident-ROV docking and inspection simulator"};
  app.require_subcommand(1);

  std::string config_path, layout_path, log_path, out_dir, format = "jsonl";
  std::string approach, approaches = "front,left,right";
  uint64_t seed = 1;
  int n_seeds = 10, jobs = 1;
  double standoff_delta = 0.0, tag_size = 0.22;

  auto* run = app.add_subcommand("run", "run a single trial");
  run->add_option("--config", config_path, "scenario config path")->required();
  run->add_option("--seed", seed, "trial seed");
  run->add_option("--approach", approach, "front|left|right");
  run->add_option("--out", out_dir, "output directory");

  auto* batch = app.add_subcommand("batch", "run a Monte Carlo batch");
  batch->add_option("--config", config_path, "scenario config path")->required();
  batch->add_option("--seed", seed, "base seed");
  batch->add_option("--seeds", n_seeds, "seeds per approach");
  batch->add_option("--approaches", approaches, "comma list of approaches");
  batch->add_option("--out", out_dir, "output directory");
  batch->add_option("--format", format, "jsonl|csv summary format");
  batch->add_option("--jobs", jobs, "parallel workers");
  batch->add_option("--standoff-delta", standoff_delta, "stand-off adjustment (m)");

  auto* analyze = app.add_subcommand("analyze", "summarize a JSONL log");
  analyze->add_option("--log", log_path, "log path")->required();
  analyze->add_option("--format", format, "jsonl|csv");

  auto* layout_check = app.add_subcommand("layout-check", "validate a layout + coverage");
  layout_check->add_option("--layout", layout_path, "layout path")->required();
  layout_check->add_option("--out", out_dir, "output directory");

  auto* bitpattern = app.add_subcommand("bitpattern", "bit-pattern design study");
  bitpattern->add_option("--size", tag_size, "tag size (m)");
  bitpattern->add_option("--out", out_dir, "output directory");

  auto* replay = app.add_subcommand("replay", "validate and summarize a log");
  replay->add_option("--log", log_path, "log path")->required();

  auto* plot = app.add_subcommand("plot", "render a trial log to SVG");
  plot->add_option("--log", log_path, "log path")->required();
  plot->add_option("--config", config_path, "scenario config path")->required();
  plot->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, approach, out_dir);
    if (batch->parsed())
      return cmd_batch(config_path, seed, n_seeds, approaches, out_dir, format, jobs,
                       standoff_delta);
    if (analyze->parsed()) return cmd_analyze(log_path, format);
    if (layout_check->parsed()) return cmd_layout_check(layout_path, out_dir);
    if (bitpattern->parsed()) return cmd_bitpattern(tag_size, out_dir);
    if (replay->parsed()) return cmd_replay(log_path);
    if (plot->parsed()) return cmd_plot(log_path, config_path, out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::CONFIG_ERROR:
      case ErrorCode::SCHEMA_MISMATCH:
      case ErrorCode::VALIDATION_ERROR:
        return kExitConfigError;
      default:
        return kExitTrialFailures;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTrialFailures;
  }
  return kExitOk;
}
