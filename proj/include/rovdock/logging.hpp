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

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rovdock/error.hpp"

namespace rovdock {

constexpr int kLogSchemaVersion = 1;

/// One JSON record per line, no wall-clock timestamps: identical runs must
/// produce identical bytes.
class JsonlLogger {
 public:
  explicit JsonlLogger(std::ostream* out = nullptr) : out_(out) {}

  void write(const nlohmann::json& j) {
    if (out_) *out_ << j.dump() << '\n';
  }

  bool enabled() const { return out_ != nullptr; }

 private:
  std::ostream* out_;
};

/// Parsed trajectory log: step records plus the event stream.
struct ReplayedLog {
  nlohmann::json meta;
  std::vector<nlohmann::json> phases;
  std::vector<nlohmann::json> waypoints;
  std::vector<nlohmann::json> steps;
  std::vector<nlohmann::json> results;

  size_t record_count() const {
    return 1 + phases.size() + waypoints.size() + steps.size() + results.size();
  }
};

/// Reads a JSONL log back, checking the schema version and that the step
/// timeline is monotone.
inline ReplayedLog replay_log(std::istream& in) {
  ReplayedLog out;
  std::string line;
  bool have_meta = false;
  double last_t = -std::numeric_limits<double>::infinity();
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::SCHEMA_MISMATCH,
                  "log line " + std::to_string(lineno) + ": " + e.what());
    }
    std::string k = j.value("k", "");
    if (k == "meta") {
      if (!j.contains("v") || j["v"].get<int>() != kLogSchemaVersion)
        throw Error(ErrorCode::SCHEMA_MISMATCH, "log schema version drift");
      if (!have_meta) {
        out.meta = j;
        have_meta = true;
      }
      last_t = -std::numeric_limits<double>::infinity();  // new trial section
    } else if (k == "phase") {
      out.phases.push_back(j);
    } else if (k == "wp") {
      out.waypoints.push_back(j);
    } else if (k == "step") {
      double t = j.at("t").get<double>();
      if (t < last_t - 1e-9)
        throw Error(ErrorCode::SCHEMA_MISMATCH,
                    "non-monotone step time at line " + std::to_string(lineno));
      last_t = t;
      out.steps.push_back(j);
    } else if (k == "result") {
      out.results.push_back(j);
    } else if (k == "meas") {
      // measurement records are optional verbosity; replay ignores them
    } else {
      throw Error(ErrorCode::SCHEMA_MISMATCH, "unknown record kind '" + k + "'");
    }
  }
  if (!have_meta) throw Error(ErrorCode::SCHEMA_MISMATCH, "log missing meta record");
  return out;
}

inline ReplayedLog replay_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SCHEMA_MISMATCH, "cannot open log: " + path);
  return replay_log(in);
}

}  // namespace rovdock
