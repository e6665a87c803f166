#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "iglu/env.hpp"
#include "test_util.hpp"

using namespace iglu;

namespace {

TaskRecord make_task(const Grid& target, const Grid& start = {}) {
  TaskRecord t;
  t.task_id = "fixture";
  t.target_grid = target;
  t.starting_grid = start;
  t.instruction = "build it";
  t.skills = label_skills(target);
  return t;
}

Grid single(CellCoord c, BlockColor color = kBlue) {
  Grid g;
  g.set(c, color);
  return g;
}

// Turns the camera with noop steps until the view points at `p`.
void aim_at(Environment& env, Vec3 p) {
  for (int i = 0; i < 100; ++i) {
    const Vec3 eye = eye_position(env.pose());
    const double dx = p.x - eye.x, dy = p.y - eye.y, dz = p.z - eye.z;
    const double yaw = rad_to_deg(std::atan2(dx, -dz));
    const double pitch = rad_to_deg(std::atan2(dy, std::hypot(dx, dz)));
    const double dyaw = wrap_signed(yaw - env.pose().yaw), dpitch = pitch - env.pose().pitch;
    if (std::abs(dyaw) < 1e-9 && std::abs(dpitch) < 1e-9) return;
    env.step({Verb::Noop, dpitch, dyaw});
  }
  FAIL() << "aiming did not converge";
}

void look_down(Environment& env) {
  while (env.pose().pitch > -90.0) env.step({Verb::Noop, -5.0, 0.0});
}

EpisodeConfig long_config() {
  EpisodeConfig c;
  c.max_steps = 10000;
  return c;
}

}  // namespace

TEST(Reset, EmptyStartSpawnsAtCentre) {
  Environment env;
  const auto obs = env.reset(make_task(single({0, 0, 0}, kYellow)), {});
  EXPECT_EQ(obs.pose, (std::array<double, 5>{5.5, 0.0, 5.5, 0.0, 0.0}));
  EXPECT_FALSE(obs.pov.has_value());
  EXPECT_EQ(obs.chat, "build it");
  EXPECT_EQ(obs.step, 0);
  EXPECT_EQ(obs.inventory.selected, 1);
}

TEST(Reset, SpawnsOnTopOfCentreColumn) {
  Grid start;
  start.set({5, 0, 5}, kRed);
  start.set({5, 1, 5}, kRed);
  start.set({5, 4, 5}, kRed);
  Environment env;
  const auto obs = env.reset(make_task(single({0, 0, 0}, kYellow), start), {});
  EXPECT_EQ(obs.pose[1], 5.0);
  EXPECT_EQ(obs.grid, start);
  EXPECT_FALSE(body_collides(env.grid(), env.pose().x, env.pose().y, env.pose().z));
}

TEST(Reset, Deterministic) {
  EpisodeConfig cfg;
  cfg.render = true;
  Environment a, b;
  const auto task = generate_task(5, {10, 4, 6});
  EXPECT_EQ(a.reset(task, cfg, 9), b.reset(task, cfg, 9));
  EXPECT_EQ(a.reset(task, cfg, 9), a.reset(task, cfg, 9));
}

TEST(Reset, RejectsEmptyTargetAndBadConfig) {
  Environment env;
  EXPECT_THROW(env.reset(make_task(single({0, 0, 0}, kYellow)), EpisodeConfig{0}), std::invalid_argument);
  TaskRecord t;
  EXPECT_THROW(env.reset(t, {}), std::invalid_argument);
  EXPECT_THROW(env.step({}), std::logic_error);
}

TEST(Step, NoopIsStatic) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), {});
  const auto before = env.pose();
  const auto r = env.step({});
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
  EXPECT_EQ(env.pose(), before);
  EXPECT_EQ(r.observation.step, 1);
}

TEST(Step, CameraDeltaClamped) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), {});
  env.step({Verb::Noop, 30.0, -30.0});
  EXPECT_EQ(env.pose().pitch, 5.0);
  EXPECT_EQ(env.pose().yaw, 355.0);
  for (int i = 0; i < 40; ++i) env.step({Verb::Noop, 5.0, 0.0});
  EXPECT_EQ(env.pose().pitch, 90.0);
  EXPECT_THROW(env.step({Verb::Noop, std::nan(""), 0.0}), std::invalid_argument);
}

TEST(Step, SelectChangesColour) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), {});
  env.step({Verb::Select4});
  EXPECT_EQ(env.inventory().selected, 4);
  EXPECT_EQ(select_verb(kYellow), Verb::Select6);
}

TEST(Step, PlacingLastBlockCompletes) {
  Environment env;
  env.reset(make_task(single({5, 0, 3}, kRed)), {});
  aim_at(env, {5.5, 0.0, 3.5});
  env.step({Verb::Select3});
  const auto r = env.step({Verb::PlaceBlock});
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.info.termination_reason, Termination::Complete);
  EXPECT_EQ(r.info.intersection_size, 1);
  EXPECT_EQ(r.info.f1_so_far, 1.0);
  ASSERT_TRUE(r.info.change);
  EXPECT_EQ(r.info.change->cell, (CellCoord{5, 0, 3}));
  EXPECT_EQ(env.score().f1, 1.0);
  EXPECT_THROW(env.step({}), std::logic_error);
}

TEST(Step, ExtraBlockPreventsCompletion) {
  Grid start;
  start.set({0, 0, 0}, kGreen);
  Environment env;
  env.reset(make_task(single({5, 0, 3}, kBlue), start), {});
  aim_at(env, {5.5, 0.0, 3.5});
  const auto r = env.step({Verb::PlaceBlock});
  EXPECT_EQ(r.info.intersection_size, 1);
  EXPECT_FALSE(r.done);
}

TEST(Step, TimeLimit) {
  Environment env;
  EpisodeConfig cfg;
  env.reset(make_task(single({0, 0, 0}, kYellow)), cfg);
  StepResult r;
  for (int i = 0; i < 499; ++i) ASSERT_FALSE(env.step({}).done);
  r = env.step({});
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.info.termination_reason, Termination::TimeLimit);
}

TEST(Step, EndEpisodeGated) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), {});
  EXPECT_THROW(env.step({Verb::EndEpisode}), std::invalid_argument);
  EpisodeConfig cfg;
  cfg.end_action_enabled = true;
  env.reset(make_task(single({0, 0, 0}, kYellow)), cfg);
  const auto r = env.step({Verb::EndEpisode});
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.info.termination_reason, Termination::EndEpisode);
}

TEST(Movement, ForwardAtYawZeroIsNorth) {
  const auto p = apply_movement(AgentPose{}, Verb::StepForward, Grid{});
  EXPECT_DOUBLE_EQ(p.z, 5.25);
  EXPECT_DOUBLE_EQ(p.x, 5.5);
  AgentPose east;
  east.yaw = 90;
  EXPECT_NEAR(apply_movement(east, Verb::StepForward, Grid{}).x, 5.75, 1e-12);
  EXPECT_NEAR(apply_movement(AgentPose{}, Verb::StepRight, Grid{}).x, 5.75, 1e-12);
  EXPECT_NEAR(apply_movement(AgentPose{}, Verb::StepLeft, Grid{}).x, 5.25, 1e-12);
  EXPECT_NEAR(apply_movement(AgentPose{}, Verb::StepBackward, Grid{}).z, 5.75, 1e-12);
}

TEST(Movement, WallBlocks) {
  Grid g;
  g.set({5, 0, 4}, kRed);
  g.set({5, 1, 4}, kRed);
  AgentPose p;
  for (int i = 0; i < 5; ++i) p = apply_movement(p, Verb::StepForward, g);
  EXPECT_EQ(p.z, 5.5);
  EXPECT_FALSE(body_collides(g, p.x, p.y, p.z));
}

TEST(Movement, ZoneWallsBlock) {
  AgentPose p;
  for (int i = 0; i < 40; ++i) p = apply_movement(p, Verb::StepForward, Grid{});
  EXPECT_GE(p.z - Kinematics::kHalfWidth, 0.0);
  EXPECT_EQ(p.z, 0.5);
}

TEST(Movement, DiagonalSlidesAlongWall) {
  Grid g;
  for (int x = 0; x < kSizeX; ++x) g.set({x, 0, 4}, kRed), g.set({x, 1, 4}, kRed);
  AgentPose p;
  p.z = 5.3;
  p.yaw = 45;
  const auto q = apply_movement(p, Verb::StepForward, g);
  EXPECT_GT(q.x, p.x);
  EXPECT_EQ(q.z, p.z);
}

TEST(Movement, JumpApexClearsOneBlock) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), long_config());
  env.step({Verb::Jump});
  double apex = env.pose().y;
  for (int i = 0; i < 30; ++i) {
    env.step({});
    apex = std::max(apex, env.pose().y);
  }
  EXPECT_NEAR(apex, 1.32, 1e-9);
  EXPECT_EQ(env.pose().y, 0.0);
  EXPECT_GT(apex, 1.0);
  EXPECT_LT(apex, 2.0);
}

TEST(Movement, JumpOntoBlock) {
  Grid start;
  start.set({5, 0, 4}, kRed);
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow), start), long_config());
  env.step({Verb::Jump});
  for (int i = 0; i < 8; ++i) env.step({Verb::StepForward});
  for (int i = 0; i < 20; ++i) env.step({});
  EXPECT_EQ(env.pose().y, 1.0);
  EXPECT_LT(env.pose().z, 5.0);
}

TEST(Movement, CannotJumpInMidAir) {
  AgentPose p;
  p.y = 3.0;
  p.vertical_velocity = -0.2;
  EXPECT_EQ(apply_movement(p, Verb::Jump, Grid{}).vertical_velocity, -0.2);
}

TEST(Movement, FallLandsOnSurface) {
  Grid g;
  g.set({5, 0, 5}, kRed);
  AgentPose p;
  p.y = 6.3;
  for (int i = 0; i < 50; ++i) p = physics_tick(p, g);
  EXPECT_EQ(p.y, 1.0);
  EXPECT_EQ(p.vertical_velocity, 0.0);
}

TEST(Movement, HeadBumpsCeiling) {
  Grid g;
  g.set({5, 3, 5}, kRed);
  AgentPose p;
  p.vertical_velocity = Kinematics::kJumpVelocity;
  double top = 0;
  for (int i = 0; i < 30; ++i) {
    p = physics_tick(p, g);
    top = std::max(top, p.y);
    ASSERT_FALSE(body_collides(g, p.x, p.y, p.z));
  }
  EXPECT_NEAR(top, 3.0 - Kinematics::kHeight, 1e-9);
  EXPECT_EQ(p.y, 0.0);
}

TEST(Place, PillarUpLiftsAgent) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), long_config());
  look_down(env);
  auto r = env.step({Verb::PlaceBlock});
  ASSERT_TRUE(r.info.change);
  EXPECT_EQ(r.info.change->cell, (CellCoord{5, 0, 5}));
  EXPECT_EQ(env.pose().y, 1.0);
  r = env.step({Verb::PlaceBlock});
  ASSERT_TRUE(r.info.change);
  EXPECT_EQ(r.info.change->cell, (CellCoord{5, 1, 5}));
  EXPECT_EQ(env.pose().y, 2.0);
  EXPECT_FALSE(body_collides(env.grid(), env.pose().x, env.pose().y, env.pose().z));
}

TEST(Place, PillarUpBlockedByCeiling) {
  Grid g;
  g.set({5, 2, 5}, kRed);
  AgentPose p;
  p.pitch = -90;
  EXPECT_FALSE(placement_target(p, g));
  g.set({5, 2, 5}, kAir);
  g.set({5, 3, 5}, kRed);
  const auto t = placement_target(p, g);
  ASSERT_TRUE(t);
  EXPECT_TRUE(t->lifts_agent);
}

TEST(Place, SkyIsNoop) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), {});
  for (int i = 0; i < 10; ++i) env.step({Verb::Noop, 5.0, 0.0});
  const auto r = env.step({Verb::PlaceBlock});
  EXPECT_FALSE(r.info.change);
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_TRUE(env.grid().empty());
}

TEST(Place, OutOfReachIsNoop) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), {});
  aim_at(env, {5.5, 0.0, 1.5});
  EXPECT_FALSE(env.step({Verb::PlaceBlock}).info.change);
}

TEST(Place, OnBlockFace) {
  Grid start;
  start.set({5, 0, 3}, kRed);
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow), start), {});
  aim_at(env, {5.5, 0.5, 4.0});
  env.step({Verb::Select2});
  const auto r = env.step({Verb::PlaceBlock});
  ASSERT_TRUE(r.info.change);
  EXPECT_EQ(r.info.change->cell, (CellCoord{5, 0, 4}));
  EXPECT_EQ(env.grid().get({5, 0, 4}), kGreen);
  aim_at(env, {5.5, 1.0, 3.5});
  ASSERT_TRUE(env.step({Verb::PlaceBlock}).info.change);
  EXPECT_EQ(env.grid().get({5, 1, 3}), kGreen);
}

TEST(Place, CountedInventoryLimits) {
  EpisodeConfig cfg = long_config();
  cfg.inventory_mode = InventoryMode::Counted;
  cfg.blocks_per_color = 1;
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), cfg);
  aim_at(env, {5.5, 0.0, 3.5});
  ASSERT_TRUE(env.step({Verb::PlaceBlock}).info.change);
  EXPECT_EQ(env.inventory().counts[0], 0);
  aim_at(env, {6.5, 0.0, 3.5});
  EXPECT_FALSE(env.step({Verb::PlaceBlock}).info.change);
  env.step({Verb::Select2});
  EXPECT_TRUE(env.step({Verb::PlaceBlock}).info.change);
}

TEST(Break, OnlyBlock) {
  Grid start;
  start.set({5, 0, 3}, kOrange);
  EpisodeConfig cfg;
  cfg.inventory_mode = InventoryMode::Counted;
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow), start), cfg);
  aim_at(env, {5.5, 0.5, 4.0});
  const auto r = env.step({Verb::BreakBlock});
  ASSERT_TRUE(r.info.change);
  EXPECT_TRUE(env.grid().empty());
  EXPECT_EQ(env.inventory().counts[kOrange.value() - 1], 21);
}

TEST(Break, NothingInReach) {
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow)), {});
  look_down(env);
  EXPECT_FALSE(env.step({Verb::BreakBlock}).info.change);
}

TEST(Break, NoFallingBlocks) {
  Grid start;
  start.set({5, 0, 3}, kRed);
  start.set({5, 1, 3}, kBlue);
  Environment env;
  env.reset(make_task(single({0, 0, 0}, kYellow), start), {});
  aim_at(env, {5.5, 0.5, 4.0});
  ASSERT_TRUE(env.step({Verb::BreakBlock}).info.change);
  EXPECT_EQ(env.grid().get({5, 1, 3}), kBlue);
  EXPECT_EQ(env.grid().nonzero_count(), 1);
}

TEST(Observation, Compass) {
  EXPECT_EQ(compass_angle(AgentPose{}), 0.0);
  EXPECT_NEAR(compass_angle(AgentPose{5.5, 0, 2.5, 0, 180, 0}), 0.0, 1e-9);
  EXPECT_NEAR(compass_angle(AgentPose{5.5, 0, 2.5, 0, 90, 0}), 90.0, 1e-9);
  EXPECT_NEAR(compass_angle(AgentPose{2.5, 0, 5.5, 0, 0, 0}), 90.0, 1e-9);
}

TEST(Observation, RenderToggle) {
  EpisodeConfig cfg;
  Environment env;
  auto obs = env.reset(make_task(single({0, 0, 0}, kYellow)), cfg);
  EXPECT_FALSE(obs.pov);
  cfg.render = true;
  obs = env.reset(make_task(single({0, 0, 0}, kYellow)), cfg);
  ASSERT_TRUE(obs.pov);
  EXPECT_EQ(obs.pov->pixels.size(), 64u * 64u * 3u);
  EXPECT_TRUE(env.step({}).observation.pov);
}

namespace {

Action random_action(std::mt19937_64& rng, bool allow_end = false) {
  static const std::vector<std::pair<Verb, int>> weights = {
      {Verb::Noop, 2},         {Verb::StepForward, 5}, {Verb::StepBackward, 2}, {Verb::StepLeft, 2},
      {Verb::StepRight, 2},    {Verb::Jump, 2},        {Verb::BreakBlock, 4},   {Verb::PlaceBlock, 6},
      {Verb::Select1, 1},      {Verb::Select2, 1},     {Verb::Select3, 1},      {Verb::Select4, 1},
      {Verb::Select5, 1},      {Verb::Select6, 1},
  };
  int total = 0;
  for (const auto& [_, w] : weights) total += w;
  int pick = std::uniform_int_distribution<int>(0, total - 1)(rng);
  Action a;
  for (const auto& [v, w] : weights) {
    if (pick < w) {
      a.verb = v;
      break;
    }
    pick -= w;
  }
  if (allow_end && std::uniform_int_distribution<int>(0, 500)(rng) == 0) a.verb = Verb::EndEpisode;
  std::uniform_real_distribution<double> cam(-7.0, 7.0);
  a.camera_pitch = cam(rng);
  a.camera_yaw = cam(rng);
  return a;
}

}  // namespace

TEST(Invariants, RandomEpisodes) {
  std::mt19937_64 rng(21);
  for (int episode = 0; episode < 30; ++episode) {
    const auto task = generate_task(episode, {10, 4, 6});
    EpisodeConfig cfg;
    cfg.max_steps = 400;
    cfg.inventory_mode = InventoryMode::Counted;
    cfg.blocks_per_color = 5;
    cfg.end_action_enabled = true;
    Grid start;
    if (episode % 2) start = fixtures::random_grid_in_box(rng, 6, 0, 10, 2);
    Environment env;
    env.reset(make_task(task.target_grid, start), cfg);
    const int initial = env.intersection_size();
    std::array<int, kNumColors + 1> conserved{};
    for (int c = 1; c <= kNumColors; ++c) conserved[c] = start.color_counts()[c] + cfg.blocks_per_color;
    double total = 0;
    bool done = false;
    while (!done) {
      const auto r = env.step(random_action(rng, true));
      total += r.reward;
      done = r.done;
      ASSERT_EQ(r.observation.grid, env.grid());
      ASSERT_FALSE(body_collides(env.grid(), env.pose().x, env.pose().y, env.pose().z));
      const auto counts = env.grid().color_counts();
      for (int c = 1; c <= kNumColors; ++c) {
        ASSERT_GE(env.inventory().counts[c - 1], 0);
        ASSERT_EQ(counts[c] + env.inventory().counts[c - 1], conserved[c]);
      }
      ASSERT_EQ(r.info.intersection_size, max_intersection_naive(env.grid(), env.target()).size);
      if (r.done) {
        ASSERT_NE(r.info.termination_reason, Termination::None);
      }
      if (r.info.termination_reason == Termination::Complete) {
        ASSERT_EQ(env.score().f1, 1.0);
      }
    }
    EXPECT_DOUBLE_EQ(total, env.intersection_size() - initial);
  }
}

TEST(Invariants, BitIdenticalReplay) {
  const auto task = generate_task(3, {12, 5, 6});
  EpisodeConfig cfg;
  cfg.render = true;
  cfg.max_steps = 200;
  std::mt19937_64 rng(8);
  std::vector<Action> actions;
  for (int i = 0; i < 200; ++i) actions.push_back(random_action(rng));
  Environment a, b;
  a.reset(task, cfg, 1);
  b.reset(task, cfg, 1);
  for (const auto& act : actions) {
    const auto ra = a.step(act), rb = b.step(act);
    ASSERT_EQ(ra.observation, rb.observation);
    ASSERT_EQ(ra.reward, rb.reward);
    ASSERT_EQ(ra.info, rb.info);
    if (ra.done) break;
  }
}

TEST(Invariants, PrunedTrackerMatchesDefaultRewardsInZone) {
  // Pruning only changes counts for alignments that push blocks out of the
  // zone; both modes must agree on completion.
  const auto task = generate_task(11, {6, 3, 6});
  EpisodeConfig a_cfg, b_cfg;
  b_cfg.prune_cut_alignments = true;
  Environment a, b;
  a.reset(task, a_cfg);
  b.reset(task, b_cfg);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 300; ++i) {
    const auto act = random_action(rng);
    const auto ra = a.step(act), rb = b.step(act);
    ASSERT_EQ(ra.observation.grid, rb.observation.grid);
    ASSERT_LE(rb.info.intersection_size, ra.info.intersection_size);
    if (ra.done || rb.done) break;
  }
}

TEST(Shaped, PlacementAtSubtaskAndUnderFeet) {
  EpisodeConfig cfg = long_config();
  cfg.reward_mode = RewardMode::ShapedSubtask;
  Grid target;
  target.set({5, 0, 5}, kBlue);
  target.set({5, 1, 5}, kBlue);
  target.set({9, 0, 9}, kBlue);
  Environment env;
  env.reset(make_task(target), cfg);
  look_down(env);
  // Under-feet placement of the exact subtask cell: 1 + 0.5.
  EXPECT_DOUBLE_EQ(env.step({Verb::PlaceBlock}).reward, 1.5);
  // Wrong colour for the next subtask: flat penalty.
  env.step({Verb::Select3});
  EXPECT_DOUBLE_EQ(env.step({Verb::PlaceBlock}).reward, -0.01);
  // Breaking the wrongly coloured block is the next subtask.
  env.step({Verb::Noop, 5.0, 0.0});
  aim_at(env, {5.5, 2.0 - 1e-3, 6.0 - 1e-3});
  const auto r = env.step({Verb::BreakBlock});
  ASSERT_TRUE(r.info.change);
  EXPECT_EQ(r.info.change->cell, (CellCoord{5, 1, 5}));
  EXPECT_DOUBLE_EQ(r.reward, 1.0);
}

TEST(Shaped, DistanceFalloff) {
  EpisodeConfig cfg = long_config();
  cfg.reward_mode = RewardMode::ShapedSubtask;
  Environment env;
  env.reset(make_task(single({5, 0, 2})), cfg);
  aim_at(env, {5.5, 0.0, 3.5});
  const auto r = env.step({Verb::PlaceBlock});
  ASSERT_TRUE(r.info.change);
  EXPECT_DOUBLE_EQ(r.reward, 0.25);
}

TEST(Config, JsonRoundTripAndProfiles) {
  EpisodeConfig c;
  c.max_steps = 77;
  c.reward_mode = RewardMode::ShapedSubtask;
  c.inventory_mode = InventoryMode::Counted;
  c.blocks_per_color = 3;
  c.end_action_enabled = true;
  c.f1_alignment = F1Alignment::Identity;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  const auto visual = config_from_json(nlohmann::json{{"profile", "visual"}});
  EXPECT_TRUE(visual.render);
  EXPECT_EQ(visual.profile, Profile::Visual);
  EXPECT_THROW(config_from_json(nlohmann::json{{"max_step", 5}}), std::invalid_argument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"max_steps", 0}}), std::invalid_argument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"reward_mode", "dense"}}), std::invalid_argument);
  EXPECT_THROW(config_from_json(nlohmann::json{{"max_steps", "ten"}}), std::invalid_argument);
  EXPECT_THROW(EpisodeConfig::for_profile("hidden"), std::invalid_argument);
}

TEST(Verbs, NamesRoundTrip) {
  for (std::size_t i = 0; i < kVerbNames.size(); ++i) {
    const auto v = static_cast<Verb>(i);
    EXPECT_EQ(parse_verb(verb_name(v)), v);
  }
  EXPECT_FALSE(parse_verb("fly"));
  EXPECT_EQ(kNumBaseVerbs, 14);
}

TEST(VectorEnv, MatchesSequential) {
  constexpr std::size_t n = 6;
  VectorEnv vec(n, 3);
  std::vector<Environment> seq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto task = generate_task(i, {8, 4, 6});
    vec[i].reset(task, {});
    seq[i].reset(task, {});
  }
  std::mt19937_64 rng(5);
  for (int s = 0; s < 100; ++s) {
    std::vector<Action> actions;
    for (std::size_t i = 0; i < n; ++i) actions.push_back(random_action(rng));
    const auto out = vec.step(actions);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = seq[i].step(actions[i]);
      ASSERT_EQ(out[i].observation, r.observation);
      ASSERT_EQ(out[i].info, r.info);
    }
  }
  EXPECT_THROW(vec.step({}), std::invalid_argument);
}
