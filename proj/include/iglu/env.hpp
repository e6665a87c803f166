#pragma once

// Episode state machine: action decoding, agent kinematics, place/break,
// observations, termination and reward wiring.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "iglu/pose.hpp"
#include "iglu/renderer.hpp"
#include "iglu/reward.hpp"
#include "iglu/tasks.hpp"
#include "iglu/voxel.hpp"

namespace iglu {

enum class Verb : std::uint8_t {
  Noop,
  StepForward,
  StepBackward,
  StepLeft,
  StepRight,
  Jump,
  BreakBlock,
  PlaceBlock,
  Select1,
  Select2,
  Select3,
  Select4,
  Select5,
  Select6,
  EndEpisode,
};

inline constexpr int kNumBaseVerbs = 14;

inline constexpr std::array<std::string_view, 15> kVerbNames = {
    "noop",     "step_forward", "step_backward", "step_left", "step_right",
    "jump",     "break_block",  "place_block",   "select_1",  "select_2",
    "select_3", "select_4",     "select_5",      "select_6",  "end_episode"};

inline std::string_view verb_name(Verb v) { return kVerbNames[static_cast<std::size_t>(v)]; }

inline std::optional<Verb> parse_verb(std::string_view name) {
  for (std::size_t i = 0; i < kVerbNames.size(); ++i)
    if (kVerbNames[i] == name) return static_cast<Verb>(i);
  return std::nullopt;
}

constexpr bool is_movement(Verb v) { return v >= Verb::StepForward && v <= Verb::Jump; }
constexpr bool is_select(Verb v) { return v >= Verb::Select1 && v <= Verb::Select6; }
constexpr Verb select_verb(BlockColor c) { return static_cast<Verb>(static_cast<int>(Verb::Select1) + c.value() - 1); }

struct Action {
  Verb verb = Verb::Noop;
  double camera_pitch = 0.0;  // degrees, clamped to +-5 per step
  double camera_yaw = 0.0;

  friend bool operator==(const Action&, const Action&) = default;
};

struct Inventory {
  std::array<int, kNumColors> counts{};
  int selected = 1;

  friend bool operator==(const Inventory&, const Inventory&) = default;
};

enum class RewardMode : std::uint8_t { MaxIntersectionDelta, ShapedSubtask };
enum class InventoryMode : std::uint8_t { Unlimited, Counted };
// Which observation fields leave the process: "visual" exposes image, chat,
// compass and inventory; "full" adds agent position and the current grid.
enum class Profile : std::uint8_t { Full, Visual };

struct EpisodeConfig {
  int max_steps = 500;
  RewardMode reward_mode = RewardMode::MaxIntersectionDelta;
  bool render = false;
  bool end_action_enabled = false;
  InventoryMode inventory_mode = InventoryMode::Unlimited;
  int blocks_per_color = 20;
  Profile profile = Profile::Full;
  bool prune_cut_alignments = false;
  F1Alignment f1_alignment = F1Alignment::Maximized;

  void validate() const {
    if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
    if (blocks_per_color < 0) throw std::invalid_argument("blocks_per_color must be non-negative");
  }

  static EpisodeConfig for_profile(std::string_view name) {
    EpisodeConfig c;
    if (name == "visual") {
      c.profile = Profile::Visual;
      c.render = true;
    } else if (name == "full") {
      c.profile = Profile::Full;
    } else {
      throw std::invalid_argument("unknown profile '" + std::string(name) + "'");
    }
    return c;
  }

  friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

inline nlohmann::json config_to_json(const EpisodeConfig& c) {
  return {
      {"max_steps", c.max_steps},
      {"reward_mode", c.reward_mode == RewardMode::ShapedSubtask ? "shaped_subtask" : "max_intersection_delta"},
      {"render", c.render},
      {"end_action_enabled", c.end_action_enabled},
      {"inventory_mode", c.inventory_mode == InventoryMode::Counted ? "counted" : "unlimited"},
      {"blocks_per_color", c.blocks_per_color},
      {"profile", c.profile == Profile::Visual ? "visual" : "full"},
      {"prune_cut_alignments", c.prune_cut_alignments},
      {"f1_alignment", c.f1_alignment == F1Alignment::Identity ? "identity" : "maximized"},
  };
}

// Missing keys keep their defaults; a "profile" key seeds the profile's
// defaults before the other keys apply.
inline EpisodeConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("episode config must be a JSON object");
  EpisodeConfig c;
  if (j.contains("profile")) c = EpisodeConfig::for_profile(j.at("profile").get<std::string>());
  auto enum_field = [&](const char* key, auto& out, std::initializer_list<std::pair<const char*, std::decay_t<decltype(out)>>> options) {
    if (!j.contains(key)) return;
    const auto value = j.at(key).get<std::string>();
    for (const auto& [name, v] : options) {
      if (value == name) {
        out = v;
        return;
      }
    }
    throw std::invalid_argument(std::string("config.") + key + ": unknown value '" + value + "'");
  };
  for (const auto& [key, _] : j.items()) {
    static constexpr std::array<std::string_view, 9> known = {
        "max_steps", "reward_mode", "render", "end_action_enabled", "inventory_mode",
        "blocks_per_color", "profile", "prune_cut_alignments", "f1_alignment"};
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("max_steps")) c.max_steps = j.at("max_steps").get<int>();
    if (j.contains("render")) c.render = j.at("render").get<bool>();
    if (j.contains("end_action_enabled")) c.end_action_enabled = j.at("end_action_enabled").get<bool>();
    if (j.contains("blocks_per_color")) c.blocks_per_color = j.at("blocks_per_color").get<int>();
    if (j.contains("prune_cut_alignments")) c.prune_cut_alignments = j.at("prune_cut_alignments").get<bool>();
    enum_field("reward_mode", c.reward_mode,
               {{"max_intersection_delta", RewardMode::MaxIntersectionDelta},
                {"shaped_subtask", RewardMode::ShapedSubtask}});
    enum_field("inventory_mode", c.inventory_mode,
               {{"unlimited", InventoryMode::Unlimited}, {"counted", InventoryMode::Counted}});
    enum_field("f1_alignment", c.f1_alignment,
               {{"maximized", F1Alignment::Maximized}, {"identity", F1Alignment::Identity}});
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

enum class Termination : std::uint8_t { None, Complete, TimeLimit, EndEpisode };

inline std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::None: return "none";
    case Termination::Complete: return "complete";
    case Termination::TimeLimit: return "time_limit";
    case Termination::EndEpisode: return "end_episode";
  }
  return "none";
}

struct Observation {
  std::optional<Image> pov;
  Inventory inventory;
  Grid grid;
  std::array<double, 5> pose{};  // x, y, z, pitch, yaw
  double compass = 0.0;
  std::string chat;
  int step = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct StepInfo {
  int intersection_size = 0;
  double f1_so_far = 0.0;
  Termination termination_reason = Termination::None;
  std::optional<BlockChange> change;

  friend bool operator==(const StepInfo&, const StepInfo&) = default;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// ---------------------------------------------------------------------------
// Kinematics

// True when the agent's box overlaps a solid cell, the ground or a zone wall.
inline bool body_collides(const Grid& g, double x, double y, double z) {
  constexpr double hw = Kinematics::kHalfWidth;
  if (x - hw < 0 || x + hw > kSizeX || z - hw < 0 || z + hw > kSizeZ || y < 0) return true;
  const int x0 = static_cast<int>(std::floor(x - hw)), x1 = static_cast<int>(std::ceil(x + hw)) - 1;
  const int z0 = static_cast<int>(std::floor(z - hw)), z1 = static_cast<int>(std::ceil(z + hw)) - 1;
  const int y0 = static_cast<int>(std::floor(y)),
            y1 = static_cast<int>(std::ceil(y + Kinematics::kHeight)) - 1;
  for (int cy = std::max(y0, 0); cy <= std::min(y1, kSizeY - 1); ++cy)
    for (int cx = std::max(x0, 0); cx <= std::min(x1, kSizeX - 1); ++cx)
      for (int cz = std::max(z0, 0); cz <= std::min(z1, kSizeZ - 1); ++cz)
        if (g.solid(cx, cy, cz)) return true;
  return false;
}

inline bool body_overlaps_cell(const AgentPose& p, const CellCoord& c) {
  constexpr double hw = Kinematics::kHalfWidth;
  return p.x - hw < c.x + 1 && p.x + hw > c.x && p.z - hw < c.z + 1 && p.z + hw > c.z &&
         p.y < c.y + 1 && p.y + Kinematics::kHeight > c.y;
}

inline bool is_supported(const AgentPose& p, const Grid& g) {
  return p.y == 0.0 || body_collides(g, p.x, p.y - 1e-9, p.z);
}

// Horizontal step (0.25 blocks, yaw-relative, per-axis revert on collision)
// or jump impulse. Vertical motion happens in physics_tick.
inline AgentPose apply_movement(AgentPose pose, Verb verb, const Grid& g) {
  if (verb == Verb::Jump) {
    if (pose.vertical_velocity <= 0 && is_supported(pose, g))
      pose.vertical_velocity = Kinematics::kJumpVelocity;
    return pose;
  }
  const double yaw = deg_to_rad(pose.yaw);
  const double fx = std::sin(yaw), fz = -std::cos(yaw);  // forward
  const double rx = std::cos(yaw), rz = std::sin(yaw);   // right
  double dx = 0, dz = 0;
  switch (verb) {
    case Verb::StepForward: dx = fx; dz = fz; break;
    case Verb::StepBackward: dx = -fx; dz = -fz; break;
    case Verb::StepRight: dx = rx; dz = rz; break;
    case Verb::StepLeft: dx = -rx; dz = -rz; break;
    default: return pose;
  }
  dx *= Kinematics::kStep;
  dz *= Kinematics::kStep;
  if (!body_collides(g, pose.x + dx, pose.y, pose.z)) pose.x += dx;
  if (!body_collides(g, pose.x, pose.y, pose.z + dz)) pose.z += dz;
  return pose;
}

// Gravity and vertical collision with snapping to the contact surface.
inline AgentPose physics_tick(AgentPose pose, const Grid& g) {
  if (pose.vertical_velocity <= 0 && is_supported(pose, g)) {
    pose.vertical_velocity = 0;
    return pose;
  }
  const double vy = pose.vertical_velocity;
  const double target_y = pose.y + vy;
  if (!body_collides(g, pose.x, target_y, pose.z)) {
    pose.y = target_y;
    pose.vertical_velocity = std::max(vy - Kinematics::kGravity, -Kinematics::kTerminalVelocity);
    return pose;
  }
  constexpr double hw = Kinematics::kHalfWidth;
  const int x0 = static_cast<int>(std::floor(pose.x - hw)), x1 = static_cast<int>(std::ceil(pose.x + hw)) - 1;
  const int z0 = static_cast<int>(std::floor(pose.z - hw)), z1 = static_cast<int>(std::ceil(pose.z + hw)) - 1;
  auto column_solid = [&](int cy) {
    if (cy < 0 || cy >= kSizeY) return false;
    for (int cx = std::max(x0, 0); cx <= std::min(x1, kSizeX - 1); ++cx)
      for (int cz = std::max(z0, 0); cz <= std::min(z1, kSizeZ - 1); ++cz)
        if (g.solid(cx, cy, cz)) return true;
    return false;
  };
  double snapped = pose.y;
  if (vy < 0) {
    // Highest surface between the old and new feet height.
    snapped = 0.0;
    for (int cy = static_cast<int>(std::floor(pose.y)) - 1; cy >= 0; --cy) {
      if (cy + 1 < target_y) break;
      if (column_solid(cy)) {
        snapped = cy + 1;
        break;
      }
    }
    if (snapped < target_y) snapped = pose.y;
  } else {
    // Lowest ceiling above the head.
    const double head = pose.y + Kinematics::kHeight;
    for (int cy = static_cast<int>(std::ceil(head - 1e-9)); cy < kSizeY; ++cy) {
      if (cy > target_y + Kinematics::kHeight) break;
      if (column_solid(cy)) {
        snapped = cy - Kinematics::kHeight;
        break;
      }
    }
  }
  if (body_collides(g, pose.x, snapped, pose.z)) snapped = pose.y;
  pose.y = snapped;
  pose.vertical_velocity = 0;
  return pose;
}

// Where a placement would land and whether it lifts the agent.
struct PlacementTarget {
  CellCoord cell;
  bool lifts_agent = false;
};

inline std::optional<RayHit> target_ray(const AgentPose& pose, const Grid& g) {
  return raycast(g, eye_position(pose), view_direction(pose), Kinematics::kReach);
}

// Placement cell for the current view, or nothing when placement would fail.
// A cell overlapping the agent is accepted only when the feet are inside it
// and standing on top of the new block is free (pillar-up).
inline std::optional<PlacementTarget> placement_target(const AgentPose& pose, const Grid& g) {
  auto hit = target_ray(pose, g);
  if (!hit) return std::nullopt;
  CellCoord c = hit->cell;
  if (!hit->ground) {
    const CellCoord n = face_normal(hit->face);
    c = {c.x + n.x, c.y + n.y, c.z + n.z};
  }
  if (!in_zone(c) || g.solid(c.x, c.y, c.z)) return std::nullopt;
  if (!body_overlaps_cell(pose, c)) return PlacementTarget{c, false};
  if (!(pose.y >= c.y && pose.y < c.y + 1)) return std::nullopt;
  Grid with_block = g;
  with_block.set(c, kBlue);
  if (body_collides(with_block, pose.x, c.y + 1.0, pose.z)) return std::nullopt;
  return PlacementTarget{c, true};
}

inline std::optional<CellCoord> break_target(const AgentPose& pose, const Grid& g) {
  auto hit = target_ray(pose, g);
  if (!hit || hit->ground) return std::nullopt;
  return hit->cell;
}

// ---------------------------------------------------------------------------

// Seeded uniform policy over the base verbs (end_episode is never drawn) with
// camera deltas uniform in [-5, 5]. Uses raw engine words, so the stream is
// the same under every standard library.
class RandomPolicy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}

  Action next() {
    Action a;
    a.verb = static_cast<Verb>(rng_() % kNumBaseVerbs);
    a.camera_pitch = unit() * 10.0 - 5.0;
    a.camera_yaw = unit() * 10.0 - 5.0;
    return a;
  }

 private:
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
};

class Environment {
 public:
  Observation reset(const TaskRecord& task, const EpisodeConfig& config, std::uint64_t seed = 0) {
    config.validate();
    if (task.target_grid.empty()) throw std::invalid_argument("task " + task.task_id + " has an empty target");
    task_ = task;
    config_ = config;
    seed_ = seed;
    grid_ = task.starting_grid;
    tracker_.emplace(task.target_grid, grid_, TrackerOptions{config.prune_cut_alignments});
    inventory_ = Inventory{};
    inventory_.counts.fill(config.blocks_per_color);
    pose_ = spawn_pose(grid_);
    steps_ = 0;
    done_ = false;
    termination_ = Termination::None;
    return observe();
  }

  StepResult step(const Action& action) {
    if (!tracker_) throw std::logic_error("step before reset");
    if (done_) throw std::logic_error("step after the episode ended");
    if (action.verb == Verb::EndEpisode && !config_.end_action_enabled)
      throw std::invalid_argument("end_episode is disabled for this episode");
    if (!std::isfinite(action.camera_pitch) || !std::isfinite(action.camera_yaw))
      throw std::invalid_argument("camera delta must be finite");

    const int prev_size = tracker_->size();
    std::optional<Subtask> subtask;
    if (config_.reward_mode == RewardMode::ShapedSubtask) subtask = next_subtask(grid_, task_.target_grid);

    constexpr double lim = Kinematics::kCameraLimit;
    pose_.pitch = std::clamp(pose_.pitch + std::clamp(action.camera_pitch, -lim, lim), -90.0, 90.0);
    pose_.yaw = wrap_yaw(pose_.yaw + std::clamp(action.camera_yaw, -lim, lim));

    std::optional<BlockChange> change;
    bool ended = false;
    if (is_movement(action.verb)) {
      pose_ = apply_movement(pose_, action.verb, grid_);
    } else if (is_select(action.verb)) {
      inventory_.selected = static_cast<int>(action.verb) - static_cast<int>(Verb::Select1) + 1;
    } else if (action.verb == Verb::PlaceBlock) {
      change = try_place();
    } else if (action.verb == Verb::BreakBlock) {
      change = try_break();
    } else if (action.verb == Verb::EndEpisode) {
      ended = true;
    }

    double reward = 0.0;
    if (change) {
      tracker_->apply(*change);
      if (config_.reward_mode == RewardMode::ShapedSubtask) reward = shaped_step_reward(*change, subtask);
    }
    pose_ = physics_tick(pose_, grid_);
    ++steps_;

    const int size = tracker_->size();
    if (config_.reward_mode == RewardMode::MaxIntersectionDelta) reward = step_reward(prev_size, size);

    const int target_n = task_.target_grid.nonzero_count();
    if (size == target_n && grid_.nonzero_count() == target_n) {
      termination_ = Termination::Complete;
    } else if (ended) {
      termination_ = Termination::EndEpisode;
    } else if (steps_ >= config_.max_steps) {
      termination_ = Termination::TimeLimit;
    }
    done_ = termination_ != Termination::None;

    StepResult r;
    r.observation = observe();
    r.reward = reward;
    r.done = done_;
    r.info.intersection_size = size;
    r.info.f1_so_far = f1_from_counts(size, grid_.nonzero_count(), target_n).f1;
    r.info.termination_reason = termination_;
    r.info.change = change;
    return r;
  }

  Observation observe() const {
    Observation o;
    if (config_.render) o.pov = render(pose_, grid_);
    o.inventory = inventory_;
    o.grid = grid_;
    o.pose = {pose_.x, pose_.y, pose_.z, pose_.pitch, pose_.yaw};
    o.compass = compass_angle(pose_);
    o.chat = task_.instruction;
    o.step = steps_;
    return o;
  }

  // Final-snapshot score under the configured alignment mode.
  F1Report score() const { return f1_score(grid_, task_.target_grid, config_.f1_alignment); }

  const Grid& grid() const { return grid_; }
  const Grid& target() const { return task_.target_grid; }
  const TaskRecord& task() const { return task_; }
  const AgentPose& pose() const { return pose_; }
  const Inventory& inventory() const { return inventory_; }
  const EpisodeConfig& config() const { return config_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  Termination termination() const { return termination_; }
  int intersection_size() const { return tracker_ ? tracker_->size() : 0; }
  std::uint64_t seed() const { return seed_; }

  // Agent standing at the zone center on top of the highest block there.
  static AgentPose spawn_pose(const Grid& g) {
    AgentPose p;
    const int cx = kSizeX / 2, cz = kSizeZ / 2;
    for (int y = kSizeY - 1; y >= 0; --y) {
      if (g.solid(cx, y, cz)) {
        p.y = y + 1;
        break;
      }
    }
    return p;
  }

 private:
  std::optional<BlockChange> try_place() {
    const BlockColor color(inventory_.selected);
    const bool counted = config_.inventory_mode == InventoryMode::Counted;
    if (counted && inventory_.counts[inventory_.selected - 1] <= 0) return std::nullopt;
    auto target = placement_target(pose_, grid_);
    if (!target) return std::nullopt;
    auto change = grid_.set(target->cell, color);
    if (target->lifts_agent) {
      pose_.y = target->cell.y + 1.0;
      pose_.vertical_velocity = 0;
    }
    if (counted) --inventory_.counts[inventory_.selected - 1];
    return change;
  }

  std::optional<BlockChange> try_break() {
    auto cell = break_target(pose_, grid_);
    if (!cell) return std::nullopt;
    auto change = grid_.set(*cell, kAir);
    if (config_.inventory_mode == InventoryMode::Counted) ++inventory_.counts[change.old_color.value() - 1];
    return change;
  }

  // Placements matching an add subtask are scored by distance (plus the
  // under-feet bonus); breaking the block of a remove subtask earns the full
  // reward; every other change gets the first far-distance penalty.
  double shaped_step_reward(const BlockChange& change, const std::optional<Subtask>& subtask) const {
    const ShapedRewardTable table;
    const double miss = table.at(6);
    if (!subtask) return miss;
    if (!change.new_color.is_air()) {
      if (subtask->kind != Subtask::Kind::Add || subtask->color != change.new_color) return miss;
      return shaped_reward(change.cell, subtask->cell, feet_cell(pose_), table);
    }
    if (subtask->kind == Subtask::Kind::Remove && subtask->cell == change.cell) return table.at(0);
    return miss;
  }

  TaskRecord task_;
  EpisodeConfig config_;
  std::uint64_t seed_ = 0;
  Grid grid_;
  std::optional<IntersectionTracker> tracker_;
  Inventory inventory_;
  AgentPose pose_;
  int steps_ = 0;
  bool done_ = false;
  Termination termination_ = Termination::None;
};

// Steps independent environments in parallel; each worker owns a contiguous
// slice so no state is shared.
class VectorEnv {
 public:
  explicit VectorEnv(std::size_t n, unsigned workers = std::thread::hardware_concurrency())
      : envs_(n), workers_(std::max(1u, workers)) {}

  std::size_t size() const { return envs_.size(); }
  Environment& operator[](std::size_t i) { return envs_[i]; }
  const Environment& operator[](std::size_t i) const { return envs_[i]; }

  std::vector<StepResult> step(const std::vector<Action>& actions) {
    if (actions.size() != envs_.size()) throw std::invalid_argument("one action per environment required");
    std::vector<StepResult> out(envs_.size());
    std::vector<std::exception_ptr> errors(envs_.size());
    auto run = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        try {
          out[i] = envs_[i].step(actions[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const std::size_t w = std::min<std::size_t>(workers_, envs_.size());
    if (w <= 1) {
      run(0, envs_.size());
    } else {
      std::vector<std::thread> threads;
      const std::size_t chunk = (envs_.size() + w - 1) / w;
      for (std::size_t lo = 0; lo < envs_.size(); lo += chunk)
        threads.emplace_back(run, lo, std::min(envs_.size(), lo + chunk));
      for (auto& t : threads) t.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return out;
  }

 private:
  std::vector<Environment> envs_;
  unsigned workers_;
};

}  // namespace iglu
