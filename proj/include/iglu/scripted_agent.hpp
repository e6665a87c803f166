#pragma once

// Privileged greedy builder: plans subtasks in scan order, finds a place to
// stand for each one (walking, stepping up one block, dropping any height,
// or pillaring up on temporary blocks), and drives the environment with
// yaw-aligned steps and exact camera aiming.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "iglu/env.hpp"
#include "iglu/pose.hpp"
#include "iglu/tasks.hpp"
#include "iglu/voxel.hpp"

namespace iglu {

// Agent standing at the centre of column (x, z) with feet at height f.
struct StandState {
  int x = 0, z = 0, f = 0;
  friend auto operator<=>(const StandState&, const StandState&) = default;
};

struct PlanOp {
  enum class Kind : std::uint8_t { Move, PillarUp, Place, Break };
  Kind kind = Kind::Move;
  StandState stand;  // Move: destination; others: where the agent stands
  CellCoord cell;    // PillarUp/Place/Break target
  BlockColor color;  // Place/PillarUp colour
  Vec3 aim;          // planned aim point
};

struct PlannedSubtask {
  Subtask subtask;
  bool scaffold = false;             // removal of a temporary pillar block
  std::vector<CellCoord> waypoints;  // stand cells walked through, (x, feet y, z)
  std::vector<PlanOp> ops;
};

struct BuilderPlan {
  std::vector<PlannedSubtask> items;
  std::size_t current = 0;
  std::optional<Subtask> unreachable;  // first subtask no stand could reach; plan truncated there

  bool truncated() const { return unreachable.has_value(); }
  int pillar_placements() const {
    int n = 0;
    for (const auto& it : items)
      for (const auto& op : it.ops) n += op.kind == PlanOp::Kind::PillarUp || (op.kind == PlanOp::Kind::Place && op.cell.x == op.stand.x && op.cell.z == op.stand.z && op.cell.y == op.stand.f);
    return n;
  }
};

namespace builder {

inline bool clear(const Grid& g, int x, int y, int z) { return y >= kSizeY || (y >= 0 && !g.solid(x, y, z)); }

inline bool in_footprint(int x, int z) { return x >= 0 && x < kSizeX && z >= 0 && z < kSizeZ; }

inline bool standable(const Grid& g, const StandState& s) {
  if (!in_footprint(s.x, s.z) || s.f < 0 || s.f > kSizeY) return false;
  if (s.f > 0 && !g.solid(s.x, s.f - 1, s.z)) return false;
  return clear(g, s.x, s.f, s.z) && clear(g, s.x, s.f + 1, s.z);
}

// Lands on the first support at or below feet height f.
inline int landing_height(const Grid& g, int x, int f, int z) {
  while (f > 0 && !g.solid(x, f - 1, z)) --f;
  return f;
}

inline constexpr std::array<std::pair<int, int>, 4> kSteps = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

// Walk to a neighbouring column on the level, drop any height, or jump up one.
inline std::vector<StandState> moves(const Grid& g, const StandState& s) {
  std::vector<StandState> out;
  for (const auto& [dx, dz] : kSteps) {
    const int nx = s.x + dx, nz = s.z + dz;
    if (!in_footprint(nx, nz)) continue;
    if (clear(g, nx, s.f, nz) && clear(g, nx, s.f + 1, nz)) {
      out.push_back({nx, nz, landing_height(g, nx, s.f, nz)});
    } else if (s.f < kSizeY && g.solid(nx, s.f, nz) && clear(g, nx, s.f + 1, nz) && clear(g, nx, s.f + 2, nz) &&
               clear(g, nx, s.f + 3, nz) && clear(g, s.x, s.f + 2, s.z) && clear(g, s.x, s.f + 3, s.z)) {
      out.push_back({nx, nz, s.f + 1});  // the jump apex puts the head into the third cell
    }
  }
  return out;
}

inline AgentPose pose_at(const StandState& s, double pitch = 0, double yaw = 0) {
  return {s.x + 0.5, static_cast<double>(s.f), s.z + 0.5, pitch, yaw, 0.0};
}

// Pitch and yaw that look from the eye at `p`; straight up/down keeps `yaw`.
inline std::pair<double, double> aim_angles(const AgentPose& pose, const Vec3& p) {
  const Vec3 eye = eye_position(pose);
  const double dx = p.x - eye.x, dy = p.y - eye.y, dz = p.z - eye.z;
  const double h = std::hypot(dx, dz);
  const double yaw = h < 1e-12 ? pose.yaw : wrap_yaw(rad_to_deg(std::atan2(dx, -dz)));
  return {std::clamp(rad_to_deg(std::atan2(dy, h)), -90.0, 90.0), yaw};
}

// Points on a unit face, centre first.
inline constexpr std::array<std::pair<double, double>, 9> kFacePoints = {
    {{0.5, 0.5}, {0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}, {0.5, 0.2}, {0.5, 0.8}, {0.2, 0.5}, {0.8, 0.5}}};

// Points on the face of `c` with outward direction d.
inline void face_points(const CellCoord& c, const CellCoord& d, std::vector<Vec3>& out) {
  for (const auto& [u, v] : kFacePoints) {
    if (d.y != 0) out.push_back({c.x + u, c.y + (d.y > 0 ? 1.0 : 0.0), c.z + v});
    else if (d.x != 0) out.push_back({c.x + (d.x > 0 ? 1.0 : 0.0), c.y + u, c.z + v});
    else out.push_back({c.x + u, c.y + v, c.z + (d.z > 0 ? 1.0 : 0.0)});
  }
}

// Aim points whose ray would place into `c`: faces of solid neighbours that
// touch c, or the ground under it.
inline std::vector<Vec3> place_aims(const Grid& g, const CellCoord& c) {
  std::vector<Vec3> out;
  for (const auto& d : kFaceNeighbors) {
    const CellCoord n{c.x + d.x, c.y + d.y, c.z + d.z};
    if (n.y < 0 || (in_zone(n) && g.solid(n.x, n.y, n.z))) face_points(c, d, out);
  }
  return out;
}

// Aim points on exposed faces of `c`.
inline std::vector<Vec3> break_aims(const Grid& g, const CellCoord& c) {
  std::vector<Vec3> out;
  for (const auto& d : kFaceNeighbors) {
    const CellCoord n{c.x + d.x, c.y + d.y, c.z + d.z};
    if (n.y < 0) continue;
    if (!in_zone(n) || !g.solid(n.x, n.y, n.z)) face_points(c, d, out);
  }
  return out;
}

inline bool has_support(const Grid& g, const CellCoord& c) {
  if (c.y == 0) return true;
  for (const auto& d : kFaceNeighbors) {
    const CellCoord n{c.x + d.x, c.y + d.y, c.z + d.z};
    if (in_zone(n) && g.solid(n.x, n.y, n.z)) return true;
  }
  return false;
}

// Would looking at `aim` from `pose` (angles recomputed) perform the subtask?
inline bool shot_works(const Grid& g, AgentPose pose, const Subtask& s, const Vec3& aim, bool allow_lift) {
  std::tie(pose.pitch, pose.yaw) = aim_angles(pose, aim);
  if (s.kind == Subtask::Kind::Add) {
    const auto t = placement_target(pose, g);
    return t && t->cell == s.cell && (allow_lift || !t->lifts_agent);
  }
  const auto b = break_target(pose, g);
  return b && *b == s.cell;
}

inline std::optional<Vec3> find_shot(const Grid& g, const AgentPose& pose, const Subtask& s, bool allow_lift,
                                     std::optional<Vec3> preferred = std::nullopt) {
  if (preferred && shot_works(g, pose, s, *preferred, allow_lift)) return preferred;
  for (const auto& aim : s.kind == Subtask::Kind::Add ? place_aims(g, s.cell) : break_aims(g, s.cell))
    if (shot_works(g, pose, s, aim, allow_lift)) return aim;
  return std::nullopt;
}

inline std::vector<Subtask> ordered_subtasks(const Grid& current, const Grid& target) {
  std::vector<Subtask> removes, adds;
  for (int y = 0; y < kSizeY; ++y)
    for (int x = 0; x < kSizeX; ++x)
      for (int z = 0; z < kSizeZ; ++z) {
        const BlockColor c = current.get({x, y, z}), t = target.get({x, y, z});
        if (!c.is_air() && c != t) removes.push_back({Subtask::Kind::Remove, {x, y, z}, kAir});
        else if (c.is_air() && !t.is_air()) adds.push_back({Subtask::Kind::Add, {x, y, z}, t});
      }
  removes.insert(removes.end(), adds.begin(), adds.end());
  return removes;
}

// Grid change and resulting stand for performing `s` from `st`.
inline void apply_effect(Grid& g, StandState& st, const Subtask& s) {
  if (s.kind == Subtask::Kind::Add) {
    g.set(s.cell, s.color);
    if (s.cell == CellCoord{st.x, st.f, st.z}) st.f = s.cell.y + 1;
  } else {
    g.set(s.cell, kAir);
    st.f = landing_height(g, st.x, st.f, st.z);
  }
}

// Can the agent still roam, rather than sit in a pit it cannot leave?
inline bool can_escape(const Grid& g, const StandState& start) {
  constexpr int kRoomy = 40;
  std::vector<char> seen(static_cast<std::size_t>((kSizeY + 1) * kSizeX * kSizeZ), 0);
  std::deque<StandState> queue{start};
  int count = 0;
  seen[static_cast<std::size_t>((start.f * kSizeX + start.x) * kSizeZ + start.z)] = 1;
  while (!queue.empty()) {
    const StandState cur = queue.front();
    queue.pop_front();
    if (++count >= kRoomy) return true;
    for (const auto& n : moves(g, cur)) {
      auto& flag = seen[static_cast<std::size_t>((n.f * kSizeX + n.x) * kSizeZ + n.z)];
      if (!flag) {
        flag = 1;
        queue.push_back(n);
      }
    }
  }
  return false;
}

struct Execution {
  std::vector<StandState> path;  // excluding the start
  int pillar = 0;                // temporary blocks placed under feet at the end of the path
  Vec3 aim;
};

using BanSet = std::set<std::pair<StandState, CellCoord>>;

struct SearchOptions {
  bool allow_moves = true;
  bool allow_lift = true;
  bool allow_scaffold = true;
  int max_pillar = 6;
};

inline int state_index(const StandState& s) { return (s.f * kSizeX + s.x) * kSizeZ + s.z; }
inline constexpr int kStateCount = (kSizeY + 1) * kSizeX * kSizeZ;

inline std::optional<Execution> find_execution(const Grid& g, const Grid& target, const StandState& start,
                                               const Subtask& s, const SearchOptions& opt, const BanSet& banned) {
  std::vector<int> parent(kStateCount, -2);
  std::vector<StandState> order;
  std::deque<StandState> queue{start};
  parent[state_index(start)] = -1;
  while (!queue.empty()) {
    const StandState cur = queue.front();
    queue.pop_front();
    order.push_back(cur);
    if (!opt.allow_moves) break;
    for (const auto& n : moves(g, cur)) {
      if (parent[state_index(n)] != -2) continue;
      parent[state_index(n)] = state_index(cur);
      queue.push_back(n);
    }
  }
  auto path_to = [&](StandState s) {
    std::vector<StandState> path;
    while (parent[state_index(s)] != -1) {
      path.push_back(s);
      const int p = parent[state_index(s)];
      s = {(p / kSizeZ) % kSizeX, p % kSizeZ, p / (kSizeX * kSizeZ)};
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  // Prefer stands that leave a way out afterwards; a stand that would wall
  // the agent in is only a fallback.
  std::optional<Execution> trapped;
  for (const auto& st : order) {
    if (banned.count({st, s.cell})) continue;
    auto aim = find_shot(g, pose_at(st), s, opt.allow_lift);
    if (!aim) continue;
    Grid after = g;
    StandState next = st;
    apply_effect(after, next, s);
    if (can_escape(after, next)) return Execution{path_to(st), 0, *aim};
    if (!trapped) trapped = Execution{path_to(st), 0, *aim};
  }
  if (trapped && !opt.allow_scaffold) return trapped;
  if (!opt.allow_scaffold) return std::nullopt;
  for (const auto& st : order) {
    Grid scaffolded = g;
    StandState top = st;
    for (int k = 1; k <= opt.max_pillar; ++k) {
      if (!target.get({top.x, top.f, top.z}).is_air() || top.f >= kSizeY) break;
      AgentPose p = pose_at(top, -90.0);
      const auto t = placement_target(p, scaffolded);
      if (!t || !t->lifts_agent || t->cell != CellCoord{top.x, top.f, top.z}) break;
      scaffolded.set(t->cell, kBlue);
      ++top.f;
      if (banned.count({top, s.cell})) continue;
      if (auto aim = find_shot(scaffolded, pose_at(top), s, false)) return Execution{path_to(st), k, *aim};
    }
  }
  return trapped;
}

}  // namespace builder

// Builds the full plan by simulating the agent through every subtask.
inline BuilderPlan plan(const Grid& current, const Grid& target, const AgentPose& pose, int selected = 1,
                        const builder::BanSet& banned = {}) {
  using namespace builder;
  BuilderPlan out;
  Grid g = current;
  StandState s{static_cast<int>(std::floor(pose.x)), static_cast<int>(std::floor(pose.z)),
               static_cast<int>(std::floor(pose.y + 1e-9))};
  s.x = std::clamp(s.x, 0, kSizeX - 1);
  s.z = std::clamp(s.z, 0, kSizeZ - 1);
  s.f = landing_height(g, s.x, std::clamp(s.f, 0, kSizeY), s.z);
  BlockColor held(selected);
  std::vector<CellCoord> scaffold;

  auto descend = [&] {
    while (!scaffold.empty()) {
      const CellCoord c = scaffold.back();
      scaffold.pop_back();
      PlannedSubtask item{{Subtask::Kind::Remove, c, kAir}, true, {}, {}};
      item.ops.push_back({PlanOp::Kind::Break, s, c, kAir, {c.x + 0.5, c.y + 1.0, c.z + 0.5}});
      g.set(c, kAir);
      s.f = landing_height(g, s.x, s.f, s.z);
      out.items.push_back(std::move(item));
    }
  };

  for (int guard = 0; guard < 4 * kSizeX * kSizeY * kSizeZ; ++guard) {
    const auto candidates = ordered_subtasks(g, target);
    if (candidates.empty()) break;
    const bool on_scaffold = !scaffold.empty();
    SearchOptions opt;
    if (on_scaffold) opt = {false, false, false, 0};
    std::optional<std::pair<Subtask, Execution>> chosen;
    for (const auto& cand : candidates) {
      if (cand.kind == Subtask::Kind::Add && !has_support(g, cand.cell)) continue;
      if (auto ex = find_execution(g, target, s, cand, opt, banned)) {
        chosen.emplace(cand, *ex);
        break;
      }
    }
    if (!chosen) {
      if (on_scaffold) {
        descend();
        continue;
      }
      out.unreachable = candidates.front();
      return out;
    }
    const auto& [task, ex] = *chosen;
    PlannedSubtask item{task, false, {}, {}};
    for (const auto& step : ex.path) {
      item.waypoints.push_back({step.x, step.f, step.z});
      item.ops.push_back({PlanOp::Kind::Move, step, {}, kAir, {}});
      s = step;
    }
    for (int k = 0; k < ex.pillar; ++k) {
      const CellCoord c{s.x, s.f, s.z};
      item.ops.push_back({PlanOp::Kind::PillarUp, s, c, held, {c.x + 0.5, c.y + 0.0, c.z + 0.5}});
      g.set(c, held);
      scaffold.push_back(c);
      ++s.f;
    }
    if (task.kind == Subtask::Kind::Add) {
      item.ops.push_back({PlanOp::Kind::Place, s, task.cell, task.color, ex.aim});
      held = task.color;
    } else {
      item.ops.push_back({PlanOp::Kind::Break, s, task.cell, kAir, ex.aim});
    }
    apply_effect(g, s, task);
    out.items.push_back(std::move(item));
  }
  descend();
  return out;
}

inline BuilderPlan plan(const Grid& current, const Grid& target) {
  return plan(current, target, Environment::spawn_pose(current));
}

// Closed-loop controller around the plan. Needs the privileged observation
// (grid and pose).
class ScriptedAgent {
 public:
  static constexpr int kMaxFailures = 5;

  void reset(const Grid& target, const Observation& obs) {
    target_ = target;
    banned_.clear();
    replans_ = 0;
    rebuild(obs);
  }

  Action act(const Observation& obs) {
    const AgentPose pose = pose_of(obs);
    judge_previous(obs, pose);
    if (failures_ >= kMaxFailures) {
      if (current_op()) {
        const auto* op = current_op();
        if (op->kind != PlanOp::Kind::Move) banned_.insert({op->stand, op->cell});
      }
      rebuild(obs);
    }
    for (int guard = 0; guard < 64; ++guard) {
      skip_finished(obs, pose);
      const PlanOp* op = current_op();
      if (op == nullptr) {
        if (obs.grid == target_ || plan_.truncated()) return idle();
        rebuild(obs);
        if (current_op() == nullptr) return idle();
        continue;
      }
      return drive(*op, obs, pose);
    }
    return idle();
  }

  const BuilderPlan& current_plan() const { return plan_; }
  int replans() const { return replans_; }
  int consecutive_failures() const { return failures_; }

 private:
  struct Expectation {
    enum class Kind : std::uint8_t { None, Move, Jump, Change } kind = Kind::None;
    AgentPose before;
    CellCoord cell;
    BlockColor color;
  };

  static AgentPose pose_of(const Observation& obs) {
    return {obs.pose[0], obs.pose[1], obs.pose[2], obs.pose[3], obs.pose[4], 0.0};
  }

  void rebuild(const Observation& obs) {
    plan_ = plan(obs.grid, target_, pose_of(obs), obs.inventory.selected, banned_);
    item_ = op_ = 0;
    failures_ = 0;
    expect_ = {};
    ++replans_;
  }

  const PlanOp* current_op() const {
    if (item_ >= plan_.items.size()) return nullptr;
    return &plan_.items[item_].ops[op_];
  }

  void advance() {
    expect_ = {};
    failures_ = 0;
    if (++op_ >= plan_.items[item_].ops.size()) {
      op_ = 0;
      ++item_;
      plan_.current = item_;
    }
  }

  static bool centred_at(const AgentPose& p, const StandState& s) {
    return std::abs(p.x - (s.x + 0.5)) < 0.13 && std::abs(p.z - (s.z + 0.5)) < 0.13;
  }

  void skip_finished(const Observation& obs, const AgentPose& pose) {
    while (const PlanOp* op = current_op()) {
      bool done = false;
      switch (op->kind) {
        case PlanOp::Kind::Move:
          done = centred_at(pose, op->stand) && pose.y == op->stand.f && is_supported(pose, obs.grid);
          break;
        case PlanOp::Kind::PillarUp:
          done = obs.grid.solid(op->cell.x, op->cell.y, op->cell.z) && pose.y >= op->cell.y + 1;
          break;
        case PlanOp::Kind::Place: done = obs.grid.get(op->cell) == op->color; break;
        case PlanOp::Kind::Break: done = !obs.grid.solid(op->cell.x, op->cell.y, op->cell.z); break;
      }
      if (!done) return;
      advance();
    }
  }

  void judge_previous(const Observation& obs, const AgentPose& pose) {
    switch (expect_.kind) {
      case Expectation::Kind::None: return;
      case Expectation::Kind::Move:
        if (pose.x == expect_.before.x && pose.z == expect_.before.z) ++failures_;
        else failures_ = 0;
        break;
      case Expectation::Kind::Jump:
        if (pose.y == expect_.before.y) ++failures_;
        else failures_ = 0;
        break;
      case Expectation::Kind::Change:
        if (obs.grid.get(expect_.cell) != expect_.color) ++failures_;
        else failures_ = 0;
        break;
    }
    expect_ = {};
  }

  static Action idle() { return {Verb::Noop, 0.0, 0.0}; }

  // Camera deltas toward (pitch, yaw); the verb rides along once both fit in
  // one step.
  static Action turn_then(Verb verb, const AgentPose& pose, double pitch, double yaw, bool& fits) {
    const double dp = pitch - pose.pitch, dy = wrap_signed(yaw - pose.yaw);
    constexpr double lim = Kinematics::kCameraLimit;
    fits = std::abs(dp) <= lim && std::abs(dy) <= lim;
    if (fits) return {verb, dp, dy};
    return {Verb::Noop, std::clamp(dp, -lim, lim), std::clamp(dy, -lim, lim)};
  }

  Action drive(const PlanOp& op, const Observation& obs, const AgentPose& pose) {
    const bool supported = is_supported(pose, obs.grid);
    if (op.kind == PlanOp::Kind::Move) return drive_move(op.stand, obs, pose, supported);
    if (!supported) return idle();  // still settling

    Subtask sub{op.kind == PlanOp::Kind::Break ? Subtask::Kind::Remove : Subtask::Kind::Add, op.cell, op.color};
    std::optional<Vec3> aim;
    const bool lift = op.kind == PlanOp::Kind::PillarUp || (op.cell.x == op.stand.x && op.cell.z == op.stand.z);
    if (op.kind == PlanOp::Kind::PillarUp) {
      sub.color = BlockColor(obs.inventory.selected);
      aim = builder::find_shot(obs.grid, pose, sub, true, op.aim);
    } else {
      aim = builder::find_shot(obs.grid, pose, sub, lift, op.aim);
    }
    if (!aim) {
      ++failures_;  // nothing to shoot from here; a few of these trigger a replan
      return idle();
    }
    const auto [pitch, yaw] = builder::aim_angles(pose, *aim);
    const Verb verb = op.kind == PlanOp::Kind::Break ? Verb::BreakBlock : Verb::PlaceBlock;
    if (op.kind == PlanOp::Kind::Place && obs.inventory.selected != op.color.value()) {
      bool fits = false;
      Action a = turn_then(Verb::Noop, pose, pitch, yaw, fits);
      a.verb = select_verb(op.color);
      return a;
    }
    bool fits = false;
    Action a = turn_then(verb, pose, pitch, yaw, fits);
    if (fits) {
      expect_.kind = Expectation::Kind::Change;
      expect_.cell = op.cell;
      expect_.color = op.kind == PlanOp::Kind::Break ? kAir : sub.color;
    }
    return a;
  }

  Action drive_move(const StandState& dest, const Observation& obs, const AgentPose& pose, bool supported) {
    const double tx = dest.x + 0.5, tz = dest.z + 0.5;
    const double dx = tx - pose.x, dz = tz - pose.z;
    const bool arrived = std::abs(dx) < 0.13 && std::abs(dz) < 0.13;
    const bool climbing = dest.f > pose.y + 1e-9;
    if (arrived) return idle();  // landing
    if (climbing && pose.y < dest.f - 1e-9) {
      if (supported) {
        expect_ = {Expectation::Kind::Jump, pose, {}, kAir};
        return {Verb::Jump, 0.0, 0.0};
      }
      return idle();  // rising
    }
    if (!supported && pose.y < dest.f - 1e-9) return idle();  // falling into a lower column

    // Face the nearest multiple of 90 degrees so steps stay on the lattice.
    const double snapped = wrap_yaw(std::round(pose.yaw / 90.0) * 90.0);
    const double dyaw = wrap_signed(snapped - pose.yaw);
    if (std::abs(dyaw) > Kinematics::kCameraLimit)
      return {Verb::Noop, 0.0, std::clamp(dyaw, -Kinematics::kCameraLimit, Kinematics::kCameraLimit)};

    const bool along_x = std::abs(dx) >= std::abs(dz);
    const double wx = along_x ? (dx > 0 ? 1.0 : -1.0) : 0.0, wz = along_x ? 0.0 : (dz > 0 ? 1.0 : -1.0);
    const double yaw = deg_to_rad(snapped);
    const double fx = std::sin(yaw), fz = -std::cos(yaw), rx = std::cos(yaw), rz = std::sin(yaw);
    Verb best = Verb::StepForward;
    double best_dot = -2;
    for (const auto& [v, ux, uz] : {std::tuple{Verb::StepForward, fx, fz}, std::tuple{Verb::StepBackward, -fx, -fz},
                                    std::tuple{Verb::StepRight, rx, rz}, std::tuple{Verb::StepLeft, -rx, -rz}}) {
      const double dot = ux * wx + uz * wz;
      if (dot > best_dot) {
        best_dot = dot;
        best = v;
      }
    }
    expect_ = {Expectation::Kind::Move, pose, {}, kAir};
    (void)obs;
    return {best, 0.0, std::abs(dyaw) > 0 ? dyaw : 0.0};
  }

  Grid target_;
  BuilderPlan plan_;
  std::size_t item_ = 0, op_ = 0;
  int failures_ = 0;
  int replans_ = 0;
  Expectation expect_;
  builder::BanSet banned_;
};

struct EpisodeReport {
  std::string task_id;
  int steps = 0;
  double reward_sum = 0.0;
  double f1 = 0.0;
  Termination termination = Termination::None;
  int replans = 0;
  int max_rejections = 0;  // longest run of place/break/move actions the env ignored
};

inline bool rejected(const Action& a, const Observation& before, const StepResult& r) {
  if (a.verb == Verb::PlaceBlock || a.verb == Verb::BreakBlock) return !r.info.change.has_value();
  if (is_movement(a.verb)) return r.observation.pose[0] == before.pose[0] && r.observation.pose[1] == before.pose[1] && r.observation.pose[2] == before.pose[2];
  return false;
}

// Runs the scripted agent for one episode; on_step(action, result) sees every
// transition.
template <class OnStep>
EpisodeReport run_scripted(const TaskRecord& task, const EpisodeConfig& config, std::uint64_t seed, OnStep&& on_step) {
  Environment env;
  Observation obs = env.reset(task, config, seed);
  ScriptedAgent agent;
  agent.reset(task.target_grid, obs);
  EpisodeReport rep;
  rep.task_id = task.task_id;
  int run = 0;
  for (;;) {
    const Action a = agent.act(obs);
    StepResult r = env.step(a);
    on_step(a, r);
    if (rejected(a, obs, r)) rep.max_rejections = std::max(rep.max_rejections, ++run);
    else if (a.verb != Verb::Noop) run = 0;
    rep.reward_sum += r.reward;
    ++rep.steps;
    obs = std::move(r.observation);
    if (r.done) {
      rep.termination = r.info.termination_reason;
      break;
    }
  }
  rep.f1 = f1_score(obs.grid, task.target_grid, config.f1_alignment).f1;
  rep.replans = agent.replans();
  return rep;
}

inline EpisodeReport run_scripted(const TaskRecord& task, const EpisodeConfig& config, std::uint64_t seed = 0) {
  return run_scripted(task, config, seed, [](const Action&, const StepResult&) {});
}

}  // namespace iglu
