#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "iglu/tasks.hpp"
#include "test_util.hpp"

using namespace iglu;

namespace {

bool has(const std::vector<SkillLabel>& v, SkillLabel s) { return std::find(v.begin(), v.end(), s) != v.end(); }

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("iglu_tasks_" + name);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST(Generator, DeterministicPerSeed) {
  const GeneratorParams params{12, 5, 4};
  const auto a = generate_task(77, params), b = generate_task(77, params);
  EXPECT_EQ(a, b);
  EXPECT_EQ(task_to_json(a).dump(), task_to_json(b).dump());
  EXPECT_NE(generate_task(78, params).target_grid, a.target_grid);
}

TEST(Generator, SingleBlockIsFlat) {
  const auto t = generate_task(3, {1, 4, 6});
  ASSERT_EQ(t.target_grid.nonzero_count(), 1);
  EXPECT_EQ(t.target_grid.blocks()[0].cell.y, 0);
  EXPECT_EQ(t.skills, std::vector<SkillLabel>{SkillLabel::Flat});
}

TEST(Generator, ConnectedToGroundWithExactCount) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const GeneratorParams params{static_cast<int>(3 + seed % 28), static_cast<int>(1 + seed % 8),
                                 static_cast<int>(1 + seed % 6)};
    const auto t = generate_task(seed, params);
    ASSERT_EQ(t.target_grid.nonzero_count(), params.n_blocks) << seed;
    const auto comps = connected_components(t.target_grid);
    ASSERT_EQ(comps.size(), 1u) << seed;
    EXPECT_EQ(comps[0].front().y, 0) << seed;
    EXPECT_TRUE(t.starting_grid.empty());
    for (const auto& b : t.target_grid.blocks()) {
      EXPECT_LT(b.cell.y, params.max_height);
      EXPECT_LE(b.color.value(), params.n_colors);
    }
    EXPECT_FALSE(has(t.skills, SkillLabel::Flying)) << seed;
  }
}

TEST(Generator, RejectsOutOfRangeParams) {
  EXPECT_THROW(generate_task(0, {0, 4, 6}), std::invalid_argument);
  EXPECT_THROW(generate_task(0, {31, 4, 6}), std::invalid_argument);
  EXPECT_THROW(generate_task(0, {5, 0, 6}), std::invalid_argument);
  EXPECT_THROW(generate_task(0, {5, 9, 6}), std::invalid_argument);
  EXPECT_THROW(generate_task(0, {5, 4, 7}), std::invalid_argument);
}

TEST(NextSubtask, NoneWhenEqual) {
  std::mt19937_64 rng(1);
  const Grid g = fixtures::random_grid(rng, 0.1);
  EXPECT_FALSE(next_subtask(g, g).has_value());
}

TEST(NextSubtask, StackAddsLowerFirst) {
  Grid target;
  target.set({4, 1, 6}, kRed);
  target.set({4, 0, 6}, kBlue);
  const auto s = next_subtask(Grid{}, target);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->kind, Subtask::Kind::Add);
  EXPECT_EQ(s->cell, (CellCoord{4, 0, 6}));
  EXPECT_EQ(s->color, kBlue);
}

TEST(NextSubtask, WrongColorRemovedThenAdded) {
  Grid target, current;
  target.set({2, 0, 2}, kGreen);
  target.set({0, 0, 0}, kYellow);
  current.set({2, 0, 2}, kPurple);
  auto s = next_subtask(current, target);
  ASSERT_TRUE(s);
  // The removal wins even though an earlier cell still needs an addition.
  EXPECT_EQ(s->kind, Subtask::Kind::Remove);
  EXPECT_EQ(s->cell, (CellCoord{2, 0, 2}));
  current = apply_subtask(current, *s);
  s = next_subtask(current, target);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->kind, Subtask::Kind::Add);
  EXPECT_EQ(s->cell, (CellCoord{0, 0, 0}));
  current = apply_subtask(current, *s);
  s = next_subtask(current, target);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->cell, (CellCoord{2, 0, 2}));
  EXPECT_EQ(s->color, kGreen);
}

TEST(NextSubtask, ConvergesWithinBound) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    Grid current = fixtures::random_grid(rng, 0.05);
    const Grid target = fixtures::random_grid(rng, 0.05);
    int bound = 0;
    for (std::size_t i = 0; i < current.data().size(); ++i) {
      const int c = current.data()[i], t = target.data()[i];
      if (c != t) bound += (c != 0 && t != 0) ? 2 : 1;  // a mismatch costs remove + add
    }
    int steps = 0;
    while (auto s = next_subtask(current, target)) {
      if (s->kind == Subtask::Kind::Add) {
        ASSERT_FALSE(current.solid(s->cell.x, s->cell.y, s->cell.z));
      } else {
        ASSERT_TRUE(current.solid(s->cell.x, s->cell.y, s->cell.z));
      }
      current = apply_subtask(current, *s);
      ASSERT_LE(++steps, bound);
    }
    EXPECT_EQ(current, target);
    EXPECT_EQ(steps, bound);
  }
}

TEST(Labeler, FlatRow) {
  Grid g;
  for (int x = 2; x < 7; ++x) g.set({x, 0, 3}, kOrange);
  EXPECT_EQ(label_skills(g), std::vector<SkillLabel>{SkillLabel::Flat});
}

TEST(Labeler, FloatingBlock) {
  Grid g;
  g.set({5, 3, 5}, kBlue);
  EXPECT_EQ(label_skills(g), std::vector<SkillLabel>{SkillLabel::Flying});
}

TEST(Labeler, HiddenCenterCube) {
  Grid g;
  for (int y = 0; y < 3; ++y)
    for (int x = 4; x < 7; ++x)
      for (int z = 4; z < 7; ++z) g.set({x, y, z}, kYellow);
  g.set({5, 1, 5}, kRed);
  const auto labels = label_skills(g);
  EXPECT_TRUE(has(labels, SkillLabel::Tricky));
  EXPECT_FALSE(has(labels, SkillLabel::Flat));
  EXPECT_FALSE(has(labels, SkillLabel::Flying));
}

TEST(Labeler, GroundDoesNotHideABlock) {
  // A plus-shaped layer with a cap: the centre block touches five blocks and
  // the ground, which is not enough.
  Grid g;
  g.set({5, 0, 5}, kRed);
  for (const auto& d : kFaceNeighbors)
    if (d.y >= 0) g.set({5 + d.x, d.y, 5 + d.z}, kBlue);
  EXPECT_FALSE(has(label_skills(g), SkillLabel::Tricky));
}

TEST(Labeler, Tower) {
  Grid g;
  for (int y = 0; y < 5; ++y) g.set({1, y, 9}, kPurple);
  EXPECT_EQ(label_skills(g), std::vector<SkillLabel>{SkillLabel::Tall});
  g.set({1, 4, 9}, kAir);
  EXPECT_TRUE(label_skills(g).empty());
}

TEST(Labeler, FlatNeverTallOrFlying) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Grid g = fixtures::random_grid(rng, 0.2, 0);
    if (g.empty()) continue;
    const auto labels = label_skills(g);
    ASSERT_TRUE(has(labels, SkillLabel::Flat));
    EXPECT_FALSE(has(labels, SkillLabel::Tall));
    EXPECT_FALSE(has(labels, SkillLabel::Flying));
  }
}

TEST(Labeler, EmptyRejected) { EXPECT_THROW(label_skills(Grid{}), std::invalid_argument); }

TEST(TaskFile, SaveLoadRoundTrip) {
  std::vector<TaskRecord> tasks;
  for (std::uint64_t s = 0; s < 5; ++s) tasks.push_back(generate_task(s, {8, 5, 6}));
  tasks[1].context_utterances = {"put a red block", "now \"quote\" it"};
  tasks[2].starting_grid.set({0, 0, 0}, kGreen);
  const auto path = temp_path("roundtrip.json");
  save_tasks(tasks, path.string());
  std::vector<std::string> warnings;
  const auto loaded = load_tasks(path.string(), &warnings);
  EXPECT_EQ(loaded, tasks);
  EXPECT_TRUE(warnings.empty());
  std::filesystem::remove(path);
}

TEST(TaskFile, OutOfRangeCoordinateRejected) {
  const auto path = temp_path("bad_x.json");
  write_file(path, R"({"task_id": "t", "target_blocks": [[1,0,1,1],[11,0,2,3]]})");
  try {
    load_tasks(path.string());
    FAIL() << "expected rejection";
  } catch (const TaskFileError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("target_blocks[1]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("x=11"), std::string::npos) << msg;
  }
  std::filesystem::remove(path);
}

TEST(TaskFile, MalformedJsonReportsPosition) {
  const auto path = temp_path("malformed.json");
  write_file(path, "[\n  {\"task_id\": \"t\",\n   \"target_blocks\": [[1,0,1,1]]\n  ,,\n]");
  try {
    load_tasks(path.string());
    FAIL() << "expected rejection";
  } catch (const TaskFileError& e) {
    EXPECT_NE(std::string(e.what()).find(":4:"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

TEST(TaskFile, ContextSegmentsUnion) {
  const auto j = nlohmann::json::parse(R"({
    "task_id": "ctx",
    "context_segments": [[[0,0,0,1],[1,0,0,2],[2,0,0,3]], [[0,1,0,4],[1,1,0,5],[2,1,0,6]]],
    "context_utterances": ["first row", "second row"],
    "target_blocks": [[5,0,5,1]]
  })");
  const auto tasks = tasks_from_json(j, "inline");
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0].starting_grid.nonzero_count(), 6);
  EXPECT_EQ(tasks[0].context_utterances.size(), 2u);
}

TEST(TaskFile, EmptyTargetAndMissingFieldsRejected) {
  EXPECT_THROW(tasks_from_json(nlohmann::json::parse(R"({"task_id": "t", "target_blocks": []})"), "x"),
               TaskFileError);
  EXPECT_THROW(tasks_from_json(nlohmann::json::parse(R"({"target_blocks": [[0,0,0,1]]})"), "x"), TaskFileError);
  EXPECT_THROW(tasks_from_json(nlohmann::json::parse(R"({"task_id": "t", "target_blocks": [[0,0,0,9]]})"), "x"),
               TaskFileError);
  EXPECT_THROW(load_tasks(temp_path("does_not_exist.json").string()), TaskFileError);
}

TEST(TaskFile, SkillMismatchWarns) {
  const auto j = nlohmann::json::parse(R"({"task_id": "t", "target_blocks": [[0,0,0,1]], "skills": ["tall"]})");
  std::vector<std::string> warnings;
  const auto tasks = tasks_from_json(j, "inline", &warnings);
  EXPECT_EQ(tasks[0].skills, std::vector<SkillLabel>{SkillLabel::Flat});
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("computed"), std::string::npos);
}

TEST(Suite, FilteredDeterministicAndBounded) {
  const auto a = generate_suite(25, 7, 12);
  const auto b = generate_suite(25, 7, 12);
  ASSERT_EQ(a.size(), 25u);
  EXPECT_EQ(a, b);
  for (const auto& t : a) {
    EXPECT_LE(t.target_grid.nonzero_count(), 12);
    for (auto l : t.skills) EXPECT_TRUE(l == SkillLabel::Flat || l == SkillLabel::Tall);
  }
  EXPECT_THROW(generate_suite(1, 0, 2), std::invalid_argument);
}


