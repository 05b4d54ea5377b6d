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

#include <future>
#include <numeric>

#include "rovdock/runner.hpp"

namespace rovdock {

struct ApproachStats {
  int trials = 0;
  int successes = 0;
  double mean_duration_s = 0.0;  // over successes
  double std_duration_s = 0.0;
};

struct BatchSummary {
  std::map<Approach, ApproachStats> per_approach;
  int trials = 0;
  int successes = 0;
  double mean_duration_s = 0.0;
  double std_duration_s = 0.0;
  double nees_mean = 0.0;

  double success_rate() const { return trials ? double(successes) / trials : 0.0; }
};

inline BatchSummary summarize(const std::vector<TrialResult>& results) {
  BatchSummary s;
  std::map<Approach, std::vector<double>> durations;
  std::vector<double> all_durations;
  double nees_sum = 0.0;
  int nees_n = 0;
  for (const auto& r : results) {
    auto& a = s.per_approach[r.approach];
    ++a.trials;
    ++s.trials;
    if (r.success) {
      ++a.successes;
      ++s.successes;
      durations[r.approach].push_back(r.duration_s);
      all_durations.push_back(r.duration_s);
    }
    if (r.nees_mean > 0.0) {
      nees_sum += r.nees_mean;
      ++nees_n;
    }
  }
  auto mean_std = [](const std::vector<double>& v) -> std::pair<double, double> {
    if (v.empty()) return {0.0, 0.0};
    double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
    return {m, std::sqrt(var)};
  };
  for (auto& [ap, st] : s.per_approach) {
    auto [m, sd] = mean_std(durations[ap]);
    st.mean_duration_s = m;
    st.std_duration_s = sd;
  }
  auto [m, sd] = mean_std(all_durations);
  s.mean_duration_s = m;
  s.std_duration_s = sd;
  s.nees_mean = nees_n ? nees_sum / nees_n : 0.0;
  return s;
}

struct BatchOutput {
  std::vector<TrialResult> results;
  BatchSummary summary;
  std::string log_text;  // concatenated per-trial JSONL, seed order
};

/// Runs n_seeds independent trials per approach with seeds base..base+n-1.
/// Trials may execute in parallel workers; per-trial logs are buffered and
/// merged in (approach, seed) order so output bytes match a serial run.
inline BatchOutput run_batch(const ScenarioConfig& base_config,
                             const std::vector<Approach>& approaches, int n_seeds,
                             uint64_t base_seed, int jobs = 1,
                             bool with_step_logs = true) {
  if (n_seeds < 1) throw Error(ErrorCode::CONFIG_ERROR, "n_seeds must be >= 1");
  MarkerLayout layout = load_layout(base_config.layout_path);

  struct Job {
    Approach approach;
    uint64_t seed;
  };
  std::vector<Job> jobs_list;
  for (Approach a : approaches)
    for (int i = 0; i < n_seeds; ++i)
      jobs_list.push_back({a, base_seed + static_cast<uint64_t>(i)});

  auto run_one = [&](const Job& job) -> std::pair<TrialResult, std::string> {
    ScenarioConfig sc = base_config;
    sc.start.approach = job.approach;
    if (!with_step_logs) sc.sim.log_every_n_steps = 0x7fffffff;
    std::ostringstream buf;
    JsonlLogger logger(&buf);
    try {
      MissionRunner runner(sc, layout, job.seed, &logger);
      return {runner.run(), buf.str()};
    } catch (const std::exception& e) {
      TrialResult r;
      r.seed = job.seed;
      r.approach = job.approach;
      r.success = false;
      r.abort_reason = std::string("RUNTIME: ") + e.what();
      return {r, buf.str()};
    }
  };

  BatchOutput out;
  out.results.resize(jobs_list.size());
  std::vector<std::string> logs(jobs_list.size());

  if (jobs <= 1) {
    for (size_t i = 0; i < jobs_list.size(); ++i) {
      auto [r, l] = run_one(jobs_list[i]);
      out.results[i] = std::move(r);
      logs[i] = std::move(l);
    }
  } else {
    std::vector<std::future<std::pair<TrialResult, std::string>>> futures;
    futures.reserve(jobs_list.size());
    // Bounded fan-out keeps memory in check; results land in seed order.
    size_t next = 0;
    while (next < jobs_list.size() || !futures.empty()) {
      while (next < jobs_list.size() &&
             futures.size() < static_cast<size_t>(jobs)) {
        futures.push_back(std::async(std::launch::async, run_one, jobs_list[next]));
        ++next;
      }
      size_t idx = next - futures.size();
      auto [r, l] = futures.front().get();
      futures.erase(futures.begin());
      out.results[idx] = std::move(r);
      logs[idx] = std::move(l);
    }
  }

  std::ostringstream all;
  for (const auto& l : logs) all << l;
  out.log_text = all.str();
  out.summary = summarize(out.results);
  return out;
}

inline std::string results_to_csv(const std::vector<TrialResult>& results) {
  std::ostringstream csv;
  csv << "approach,seed,success,duration_s,abort_reason\n";
  for (const auto& r : results) {
    csv << to_string(r.approach) << ',' << r.seed << ',' << (r.success ? 1 : 0) << ','
        << r.duration_s << ',' << (r.abort_reason ? *r.abort_reason : "") << '\n';
  }
  return csv.str();
}

inline nlohmann::json summary_to_json(const BatchSummary& s) {
  nlohmann::json j;
  j["trials"] = s.trials;
  j["successes"] = s.successes;
  j["success_rate"] = s.success_rate();
  j["mean_duration_s"] = s.mean_duration_s;
  j["std_duration_s"] = s.std_duration_s;
  j["nees_mean"] = s.nees_mean;
  for (const auto& [ap, st] : s.per_approach) {
    j["per_approach"][to_string(ap)] = {{"trials", st.trials},
                                        {"successes", st.successes},
                                        {"mean_duration_s", st.mean_duration_s},
                                        {"std_duration_s", st.std_duration_s}};
  }
  return j;
}

/// Recomputes a summary from a replayed log's result records; used by the
/// analyze command and as a brute-force recount of the in-memory totals.
inline BatchSummary summarize_log(const ReplayedLog& log) {
  std::vector<TrialResult> results;
  for (const auto& jr : log.results) {
    TrialResult r;
    r.success = jr.at("success").get<bool>();
    r.duration_s = jr.at("duration_s").get<double>();
    r.seed = jr.at("seed").get<uint64_t>();
    auto ap = approach_from_string(jr.at("approach").get<std::string>());
    r.approach = ap.value_or(Approach::FRONT);
    if (!jr.at("abort_reason").is_null())
      r.abort_reason = jr.at("abort_reason").get<std::string>();
    if (jr.contains("nees_mean")) r.nees_mean = jr.at("nees_mean").get<double>();
    results.push_back(r);
  }
  return summarize(results);
}

}  // namespace rovdock
