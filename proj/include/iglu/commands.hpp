#pragma once

// Implementations behind the command-line tool; each returns a JSON report
// so callers (and tests) can inspect results without parsing text.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iglu/behavior.hpp"
#include "iglu/env.hpp"
#include "iglu/renderer.hpp"
#include "iglu/scripted_agent.hpp"
#include "iglu/tasks.hpp"

namespace iglu {

// Bad user input (flags, files, contents): exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

inline std::uint64_t action_digest(std::uint64_t h, const Action& a) {
  const auto v = static_cast<std::uint8_t>(a.verb);
  h = fnv1a(h, &v, 1);
  h = fnv1a(h, &a.camera_pitch, sizeof a.camera_pitch);
  return fnv1a(h, &a.camera_yaw, sizeof a.camera_yaw);
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::clamp(q * static_cast<double>(v.size() - 1), 0.0, static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  long long steps = 100000;
  bool render = false;
  int episodes = 1;  // distinct generated tasks, cycled on episode end
  std::uint64_t seed = 0;
  std::string dump_frames;  // directory for the first frames (render on)
  int frames_to_dump = 16;
};

inline nlohmann::json cmd_bench(const BenchOptions& o) {
  if (o.steps <= 0) throw InputError("--steps must be positive");
  if (o.episodes <= 0) throw InputError("--episodes must be positive");
  if (!o.dump_frames.empty() && !o.render) throw InputError("--dump-frames needs --render on");
  std::vector<TaskRecord> tasks;
  for (int k = 0; k < o.episodes; ++k) tasks.push_back(generate_task(o.seed + static_cast<std::uint64_t>(k)));
  EpisodeConfig cfg;
  cfg.render = o.render;
  Environment env;
  RandomPolicy policy(o.seed);
  std::vector<double> latency;
  latency.reserve(static_cast<std::size_t>(o.steps));
  std::uint64_t digest = kFnvOffset;
  int episode = 0, resets = 1, dumped = 0;
  env.reset(tasks[0], cfg, o.seed);
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  for (long long i = 0; i < o.steps; ++i) {
    const Action a = policy.next();
    digest = action_digest(digest, a);
    const auto s0 = clock::now();
    StepResult r = env.step(a);
    latency.push_back(std::chrono::duration<double, std::micro>(clock::now() - s0).count());
    if (dumped < o.frames_to_dump && !o.dump_frames.empty() && r.observation.pov) {
      std::filesystem::create_directories(o.dump_frames);
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05d.ppm", dumped++);
      write_ppm(*r.observation.pov, (std::filesystem::path(o.dump_frames) / name).string());
    }
    if (r.done && i + 1 < o.steps) {
      episode = (episode + 1) % o.episodes;
      env.reset(tasks[static_cast<std::size_t>(episode)], cfg, o.seed + static_cast<std::uint64_t>(resets++));
    }
  }
  const double secs = std::chrono::duration<double>(clock::now() - t0).count();
  nlohmann::json rep;
  rep["steps"] = o.steps;
  rep["render"] = o.render;
  rep["episodes"] = o.episodes;
  rep["seed"] = o.seed;
  rep["resets"] = resets;
  rep["seconds"] = secs;
  rep["sps"] = secs > 0 ? static_cast<double>(o.steps) / secs : 0.0;
  rep["latency_us"] = {{"p50", percentile(latency, 0.50)}, {"p99", percentile(latency, 0.99)}};
  rep["action_digest"] = digest;
  rep["final_grid"] = blocks_to_json(env.grid());
  rep["frames_dumped"] = dumped;
  return rep;
}

inline std::string bench_text(const nlohmann::json& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "steps %lld  render %s  %.0f steps/s  p50 %.2f us  p99 %.2f us\n",
                r["steps"].get<long long>(), r["render"].get<bool>() ? "on" : "off", r["sps"].get<double>(),
                r["latency_us"]["p50"].get<double>(), r["latency_us"]["p99"].get<double>());
  return buf;
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
  std::string agent = "scripted";  // scripted | random
  int max_steps = 2000;
  std::uint64_t seed = 0;
  EpisodeConfig config;  // max_steps is overridden by max_steps above
  // Called once per step when tracing; receives one JSON object.
  std::function<void(const nlohmann::json&)> trace;
};

inline nlohmann::json trace_line(const std::string& task_id, const Action& a, const StepResult& r) {
  nlohmann::ordered_json j;
  j["task_id"] = task_id;
  j["step"] = r.observation.step;
  j["action"] = action_to_json(a);
  j["reward"] = r.reward;
  j["done"] = r.done;
  j["termination_reason"] = termination_name(r.info.termination_reason);
  j["intersection_size"] = r.info.intersection_size;
  j["pose"] = r.observation.pose;
  j["inventory"] = r.observation.inventory.counts;
  j["selected"] = r.observation.inventory.selected;
  j["compass"] = r.observation.compass;
  j["grid"] = blocks_to_json(r.observation.grid);
  if (r.observation.pov) j["pov_digest"] = image_digest(*r.observation.pov);
  return j;
}

inline nlohmann::json cmd_run(const std::vector<TaskRecord>& tasks, const RunOptions& o) {
  if (o.agent != "scripted" && o.agent != "random") throw InputError("--agent must be scripted or random");
  if (o.max_steps <= 0) throw InputError("--max-steps must be positive");
  if (tasks.empty()) throw InputError("no tasks to run");
  EpisodeConfig cfg = o.config;
  cfg.max_steps = o.max_steps;
  nlohmann::json episodes = nlohmann::json::array();
  struct Acc {
    int n = 0;
    double f1 = 0, reward = 0, completed = 0;
  };
  std::map<std::string, Acc> per_skill;
  Acc all;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    const std::uint64_t seed = o.seed + i;
    auto on_step = [&](const Action& a, const StepResult& r) {
      if (o.trace) o.trace(trace_line(t.task_id, a, r));
    };
    EpisodeReport rep;
    if (o.agent == "scripted") {
      rep = run_scripted(t, cfg, seed, on_step);
    } else {
      Environment env;
      env.reset(t, cfg, seed);
      RandomPolicy policy(seed);
      rep.task_id = t.task_id;
      for (;;) {
        const Action a = policy.next();
        const StepResult r = env.step(a);
        on_step(a, r);
        rep.reward_sum += r.reward;
        ++rep.steps;
        if (r.done) {
          rep.termination = r.info.termination_reason;
          break;
        }
      }
      rep.f1 = env.score().f1;
    }
    nlohmann::json skills = nlohmann::json::array();
    for (auto s : t.skills) skills.push_back(skill_name(s));
    episodes.push_back({{"task_id", rep.task_id},
                        {"steps", rep.steps},
                        {"reward_sum", rep.reward_sum},
                        {"f1", rep.f1},
                        {"termination_reason", termination_name(rep.termination)},
                        {"skills", skills}});
    const double done = rep.termination == Termination::Complete ? 1.0 : 0.0;
    all = {all.n + 1, all.f1 + rep.f1, all.reward + rep.reward_sum, all.completed + done};
    std::vector<std::string> buckets;
    for (auto s : t.skills) buckets.push_back(skill_name(s));
    if (buckets.empty()) buckets.push_back("unlabeled");
    for (const auto& name : buckets) {
      auto& acc = per_skill[name];
      acc = {acc.n + 1, acc.f1 + rep.f1, acc.reward + rep.reward_sum, acc.completed + done};
    }
  }
  auto summary = [](const Acc& a) {
    return nlohmann::json{{"tasks", a.n},
                          {"mean_f1", a.f1 / a.n},
                          {"mean_reward", a.reward / a.n},
                          {"completion_rate", a.completed / a.n}};
  };
  nlohmann::json skills = nlohmann::json::object();
  for (const auto& [name, acc] : per_skill) skills[name] = summary(acc);
  return {{"agent", o.agent}, {"episodes", episodes}, {"aggregate", summary(all)}, {"per_skill", skills}};
}

inline std::string run_text(const nlohmann::json& r) {
  std::string out;
  char buf[256];
  for (const auto& e : r["episodes"]) {
    std::snprintf(buf, sizeof buf, "%-24s steps %5d  reward %8.3f  f1 %.3f  %s\n", e["task_id"].get<std::string>().c_str(),
                  e["steps"].get<int>(), e["reward_sum"].get<double>(), e["f1"].get<double>(),
                  e["termination_reason"].get<std::string>().c_str());
    out += buf;
  }
  const auto& a = r["aggregate"];
  std::snprintf(buf, sizeof buf, "all: %d tasks, mean f1 %.4f, completion %.3f\n", a["tasks"].get<int>(),
                a["mean_f1"].get<double>(), a["completion_rate"].get<double>());
  out += buf;
  for (const auto& [name, s] : r["per_skill"].items()) {
    std::snprintf(buf, sizeof buf, "  %-7s %3d tasks, mean f1 %.4f\n", name.c_str(), s["tasks"].get<int>(),
                  s["mean_f1"].get<double>());
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// eval

// Final snapshot per task id from demo JSON lines (highest index wins).
inline std::map<std::string, Grid> demo_final_grids(const std::vector<std::string>& lines) {
  std::map<std::string, std::pair<long long, Grid>> best;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "demo line " + std::to_string(i + 1);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("task_id") || !j.contains("index") || !j.contains("blocks"))
      throw InputError(where + ": needs task_id, index and blocks");
    const auto id = j["task_id"].get<std::string>();
    const auto idx = j["index"].get<long long>();
    Grid g;
    try {
      g = Grid::from_blocks(blocks_from_json(j["blocks"], where));
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
    auto it = best.find(id);
    if (it == best.end() || idx >= it->second.first) best[id] = {idx, g};
  }
  std::map<std::string, Grid> out;
  for (auto& [id, v] : best) out.emplace(id, std::move(v.second));
  return out;
}

inline nlohmann::json cmd_eval(const std::vector<std::string>& demo_lines, const std::vector<TaskRecord>& tasks,
                               F1Alignment alignment = F1Alignment::Maximized) {
  const auto finals = demo_final_grids(demo_lines);
  std::map<std::string, const TaskRecord*> by_id;
  for (const auto& t : tasks) by_id[t.task_id] = &t;
  for (const auto& [id, _] : finals)
    if (!by_id.count(id)) throw InputError("demo task id '" + id + "' does not appear in the task file");
  nlohmann::json reports = nlohmann::json::array();
  double sum = 0;
  for (const auto& t : tasks) {
    const auto it = finals.find(t.task_id);
    const Grid snapshot = it == finals.end() ? Grid{} : it->second;
    const F1Report f = f1_score(snapshot, t.target_grid, alignment);
    reports.push_back({{"task_id", t.task_id},
                       {"precision", f.precision},
                       {"recall", f.recall},
                       {"f1", f.f1},
                       {"intersection_size", f.intersection_size},
                       {"has_demo", it != finals.end()}});
    sum += f.f1;
  }
  return {{"tasks", reports}, {"mean_f1", tasks.empty() ? 0.0 : sum / static_cast<double>(tasks.size())}};
}

// ---------------------------------------------------------------------------
// convert

struct ConvertResult {
  nlohmann::json summary;
  std::vector<std::string> demo_lines;
  std::vector<TaskRecord> tasks;
  std::vector<std::string> messages;  // per-record warnings and failures
};

// replay_ok: the tape replayed without errors or warnings. ending_match: the
// replayed grid also equals worldEndingState (fails for elided tapes).
inline ConvertResult cmd_convert(std::string_view raw, const IdOffsetMap& map = {}) {
  ConvertResult out;
  int parsed = 0, replay_ok = 0, ending_match = 0, warnings = 0, failed = 0;
  for (const auto& p : parse_records(raw)) {
    if (!p.record) {
      ++failed;
      out.messages.push_back("parse failed: " + p.error);
      continue;
    }
    ++parsed;
    const auto& rec = *p.record;
    const std::string id = demo_task_id(rec.game_id, rec.step_id);
    try {
      std::vector<std::string> w;
      const Grid replayed = replay_tape(rec, map, &w);
      const DemoTrajectory demo = to_trajectory(rec, map);
      for (const auto& m : w) out.messages.push_back(id + ": " + m);
      for (const auto& m : demo.warnings) out.messages.push_back(id + ": " + m);
      warnings += static_cast<int>(w.size());
      if (w.empty()) ++replay_ok;
      if (replayed == demo.target) ++ending_match;
      for (auto& line : trajectory_jsonl(demo)) out.demo_lines.push_back(std::move(line));
      TaskRecord t;
      t.task_id = id;
      t.target_grid = demo.target;
      if (rec.extra.contains("instruction") && rec.extra["instruction"].is_string())
        t.instruction = rec.extra["instruction"].get<std::string>();
      t.skills = label_skills(t.target_grid);
      out.tasks.push_back(std::move(t));
    } catch (const std::exception& e) {
      ++failed;
      --parsed;
      out.messages.push_back(id + ": replay failed: " + e.what());
    }
  }
  out.summary = {{"parsed", parsed},
                 {"replay_ok", replay_ok},
                 {"ending_match", ending_match},
                 {"warnings", warnings},
                 {"failed", failed}};
  return out;
}

}  // namespace iglu
