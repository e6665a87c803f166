#include "iglu/c_api.h"

#include <cstring>
#include <string>

#include "iglu/env.hpp"

struct iglu_env {
  iglu::TaskRecord task;
  iglu::EpisodeConfig config;
  iglu::Environment env;
};

struct iglu_policy {
  iglu::RandomPolicy policy;
};

namespace {

thread_local std::string last_error;

template <class F>
auto guarded(F&& f, decltype(f()) on_error) -> decltype(f()) {
  try {
    last_error.clear();
    return f();
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return on_error;
}

iglu::EpisodeConfig parse_config(const char* text) {
  if (text == nullptr) return {};
  return iglu::config_from_json(iglu::parse_json_text(text, "config"));
}

void fill(const iglu::Observation& o, iglu_obs* out) {
  if (out == nullptr) return;
  out->has_pov = o.pov ? 1 : 0;
  if (o.pov) std::memcpy(out->pov, o.pov->pixels.data(), IGLU_POV_BYTES);
  else std::memset(out->pov, 0, IGLU_POV_BYTES);
  const auto& cells = o.grid.data();
  for (int i = 0; i < IGLU_GRID_CELLS; ++i) out->grid[i] = static_cast<int8_t>(cells[static_cast<std::size_t>(i)]);
  for (int i = 0; i < 6; ++i) out->inventory[i] = o.inventory.counts[static_cast<std::size_t>(i)];
  out->selected = o.inventory.selected;
  for (int i = 0; i < 5; ++i) out->pose[i] = static_cast<float>(o.pose[static_cast<std::size_t>(i)]);
  out->compass = static_cast<float>(o.compass);
  out->step = o.step;
}

}  // namespace

extern "C" {

const char* iglu_last_error(void) { return last_error.c_str(); }

int iglu_verb_count(void) { return static_cast<int>(iglu::kVerbNames.size()); }

const char* iglu_verb_name(int verb) {
  if (verb < 0 || verb >= iglu_verb_count()) return nullptr;
  return iglu::kVerbNames[static_cast<std::size_t>(verb)].data();
}

iglu_env* iglu_env_create(const char* task_json, const char* config_json) {
  return guarded(
      [&]() -> iglu_env* {
        if (task_json == nullptr) throw std::invalid_argument("task_json is null");
        auto e = std::make_unique<iglu_env>();
        e->task = iglu::task_from_json(iglu::parse_json_text(task_json, "task"), "task");
        e->config = parse_config(config_json);
        e->config.validate();
        return e.release();
      },
      nullptr);
}

iglu_env* iglu_env_create_generated(uint64_t task_seed, int n_blocks, int max_height, const char* config_json) {
  return guarded(
      [&]() -> iglu_env* {
        auto e = std::make_unique<iglu_env>();
        iglu::GeneratorParams p;
        p.n_blocks = n_blocks;
        p.max_height = max_height;
        e->task = iglu::generate_task(task_seed, p);
        e->config = parse_config(config_json);
        e->config.validate();
        return e.release();
      },
      nullptr);
}

void iglu_env_destroy(iglu_env* env) { delete env; }

int iglu_env_reset(iglu_env* env, uint64_t seed, iglu_obs* out) {
  return guarded(
      [&] {
        if (env == nullptr) throw std::invalid_argument("env is null");
        fill(env->env.reset(env->task, env->config, seed), out);
        return 0;
      },
      -1);
}

int iglu_env_step(iglu_env* env, int verb, double camera_pitch, double camera_yaw, iglu_obs* out, iglu_step_info* info) {
  return guarded(
      [&] {
        if (env == nullptr) throw std::invalid_argument("env is null");
        if (verb < 0 || verb >= iglu_verb_count()) throw std::invalid_argument("verb index out of range");
        const auto r = env->env.step({static_cast<iglu::Verb>(verb), camera_pitch, camera_yaw});
        fill(r.observation, out);
        if (info != nullptr) {
          info->reward = r.reward;
          info->done = r.done ? 1 : 0;
          info->intersection_size = r.info.intersection_size;
          info->f1_so_far = r.info.f1_so_far;
          info->termination_reason = static_cast<int32_t>(r.info.termination_reason);
          info->has_change = r.info.change ? 1 : 0;
          const auto c = r.info.change.value_or(iglu::BlockChange{});
          const int32_t vals[5] = {c.cell.x, c.cell.y, c.cell.z, c.old_color.value(), c.new_color.value()};
          std::memcpy(info->change, vals, sizeof vals);
        }
        return 0;
      },
      -1);
}

const char* iglu_env_instruction(const iglu_env* env) { return env == nullptr ? nullptr : env->task.instruction.c_str(); }

iglu_policy* iglu_random_policy_create(uint64_t seed) { return new iglu_policy{iglu::RandomPolicy(seed)}; }

void iglu_random_policy_next(iglu_policy* p, int* verb, double* camera_pitch, double* camera_yaw) {
  const auto a = p->policy.next();
  if (verb != nullptr) *verb = static_cast<int>(a.verb);
  if (camera_pitch != nullptr) *camera_pitch = a.camera_pitch;
  if (camera_yaw != nullptr) *camera_yaw = a.camera_yaw;
}

void iglu_random_policy_destroy(iglu_policy* p) { delete p; }

}  // extern "C"
