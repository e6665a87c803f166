#pragma once

// Task records and files, the compact-structure generator, the sequential
// subtask generator and the skill labeler.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iglu/voxel.hpp"

namespace iglu {

enum class SkillLabel : std::uint8_t { Flat, Flying, Tricky, Tall };

inline constexpr std::array<SkillLabel, 4> kAllSkills = {SkillLabel::Flat, SkillLabel::Flying,
                                                         SkillLabel::Tricky, SkillLabel::Tall};

inline std::string skill_name(SkillLabel s) {
  switch (s) {
    case SkillLabel::Flat: return "flat";
    case SkillLabel::Flying: return "flying";
    case SkillLabel::Tricky: return "tricky";
    case SkillLabel::Tall: return "tall";
  }
  return "unknown";
}

inline std::optional<SkillLabel> parse_skill(std::string_view name) {
  for (auto s : kAllSkills)
    if (skill_name(s) == name) return s;
  return std::nullopt;
}

struct TaskRecord {
  std::string task_id;
  Grid starting_grid;
  Grid target_grid;
  std::string instruction;
  std::vector<std::string> context_utterances;
  std::vector<SkillLabel> skills;

  friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

struct Subtask {
  enum class Kind : std::uint8_t { Add, Remove };
  Kind kind = Kind::Add;
  CellCoord cell;
  BlockColor color;  // meaningful for Add only

  friend bool operator==(const Subtask&, const Subtask&) = default;
};

// Lowest mismatching cell in (y, x, z) order. Removals of wrong or extra
// blocks take priority over additions.
inline std::optional<Subtask> next_subtask(const Grid& current, const Grid& target) {
  const auto& cur = current.data();
  const auto& tgt = target.data();
  for (int y = 0; y < kSizeY; ++y)
    for (int x = 0; x < kSizeX; ++x)
      for (int z = 0; z < kSizeZ; ++z) {
        const int i = cell_index(x, y, z);
        if (cur[i] != 0 && cur[i] != tgt[i]) return Subtask{Subtask::Kind::Remove, {x, y, z}, kAir};
      }
  for (int y = 0; y < kSizeY; ++y)
    for (int x = 0; x < kSizeX; ++x)
      for (int z = 0; z < kSizeZ; ++z) {
        const int i = cell_index(x, y, z);
        if (tgt[i] != 0 && cur[i] == 0) return Subtask{Subtask::Kind::Add, {x, y, z}, BlockColor(tgt[i])};
      }
  return std::nullopt;
}

inline Grid apply_subtask(Grid g, const Subtask& s) {
  g.set(s.cell, s.kind == Subtask::Kind::Add ? s.color : kAir);
  return g;
}

// Height index from which a block is out of reach for an agent standing on
// the ground (placement radius 3, eye at 1.6).
inline constexpr int kTallHeight = 4;

inline std::vector<SkillLabel> label_skills(const Grid& target) {
  if (target.empty()) throw std::invalid_argument("cannot label an empty structure");
  std::vector<SkillLabel> labels;
  int max_y = 0;
  for (const auto& b : target.blocks()) max_y = std::max(max_y, b.cell.y);
  if (max_y == 0) {
    labels.push_back(SkillLabel::Flat);
  }
  bool flying = false;
  for (const auto& comp : connected_components(target)) {
    // Components are sorted (y, x, z), so the first cell holds the minimum y.
    if (comp.front().y > 0) flying = true;
  }
  if (flying) labels.push_back(SkillLabel::Flying);

  // A block is hidden when all six face neighbours are blocks.
  bool hidden = false;
  for (const auto& b : target.blocks()) {
    bool covered = true;
    for (const auto& d : kFaceNeighbors) {
      CellCoord n{b.cell.x + d.x, b.cell.y + d.y, b.cell.z + d.z};
      if (!in_zone(n) || !target.solid(n.x, n.y, n.z)) {
        covered = false;
        break;
      }
    }
    if (covered) {
      hidden = true;
      break;
    }
  }
  if (hidden) labels.push_back(SkillLabel::Tricky);
  if (max_y >= kTallHeight) labels.push_back(SkillLabel::Tall);
  return labels;
}

struct GeneratorParams {
  int n_blocks = 10;
  int max_height = 4;
  int n_colors = kNumColors;
};

// Seeded random-walk growth of a ground-connected compact structure.
inline TaskRecord generate_task(std::uint64_t seed, const GeneratorParams& params = {}) {
  if (params.n_blocks < 1 || params.n_blocks > 30)
    throw std::invalid_argument("n_blocks must lie in [1, 30]");
  if (params.max_height < 1 || params.max_height > 8)
    throw std::invalid_argument("max_height must lie in [1, 8]");
  if (params.n_colors < 1 || params.n_colors > kNumColors)
    throw std::invalid_argument("n_colors must lie in [1, 6]");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coord(0, kSizeX - 1);
  std::uniform_int_distribution<int> color(1, params.n_colors);
  std::uniform_int_distribution<int> side(0, 3);
  std::bernoulli_distribution horizontal(0.7);
  std::bernoulli_distribution upward(0.5);

  Grid g;
  std::vector<CellCoord> placed;
  CellCoord first{coord(rng), 0, coord(rng)};
  g.set(first, BlockColor(color(rng)));
  placed.push_back(first);
  static constexpr CellCoord kSides[4] = {{1, 0, 0}, {-1, 0, 0}, {0, 0, 1}, {0, 0, -1}};
  while (static_cast<int>(placed.size()) < params.n_blocks) {
    std::uniform_int_distribution<std::size_t> pick(0, placed.size() - 1);
    const CellCoord from = placed[pick(rng)];
    CellCoord d = horizontal(rng) ? kSides[side(rng)] : CellCoord{0, upward(rng) ? 1 : -1, 0};
    CellCoord c{from.x + d.x, from.y + d.y, from.z + d.z};
    if (!in_zone(c) || c.y >= params.max_height || g.solid(c.x, c.y, c.z)) continue;
    g.set(c, BlockColor(color(rng)));
    placed.push_back(c);
  }

  TaskRecord t;
  t.task_id = "generated-" + std::to_string(seed);
  t.target_grid = g;
  t.skills = label_skills(g);
  auto counts = g.color_counts();
  std::ostringstream text;
  text << "Build a structure of " << g.nonzero_count() << " blocks:";
  bool first_color = true;
  for (int c = 1; c <= kNumColors; ++c) {
    if (counts[c] == 0) continue;
    text << (first_color ? " " : ", ") << counts[c] << ' ' << color_name(BlockColor(c));
    first_color = false;
  }
  text << '.';
  t.instruction = text.str();
  return t;
}

// Deterministic suite: seeds first_seed, first_seed + 1, ... with block counts
// cycling through [3, max_blocks] and heights through [1, 8], keeping only
// tasks whose labels all lie in `allowed`.
inline std::vector<TaskRecord> generate_suite(std::size_t count, std::uint64_t first_seed = 0, int max_blocks = 15,
                                              std::vector<SkillLabel> allowed = {SkillLabel::Flat, SkillLabel::Tall}) {
  if (max_blocks < 3 || max_blocks > 30) throw std::invalid_argument("max_blocks must lie in [3, 30]");
  std::vector<TaskRecord> out;
  const int span = max_blocks - 2;
  for (std::uint64_t seed = first_seed; out.size() < count; ++seed) {
    const GeneratorParams p{3 + static_cast<int>(seed % span), 1 + static_cast<int>(seed % 8), kNumColors};
    TaskRecord t = generate_task(seed, p);
    const bool ok = std::all_of(t.skills.begin(), t.skills.end(), [&](SkillLabel s) {
      return std::find(allowed.begin(), allowed.end(), s) != allowed.end();
    });
    if (ok) out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Task files

class TaskFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json blocks_to_json(const Grid& g) {
  auto arr = nlohmann::json::array();
  for (const auto& b : g.blocks())
    arr.push_back({b.cell.x, b.cell.y, b.cell.z, b.color.value()});
  return arr;
}

inline std::vector<Block> blocks_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw TaskFileError(where + ": expected a list of [x, y, z, color]");
  std::vector<Block> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 4 ||
        !std::all_of(e.begin(), e.end(), [](const auto& v) { return v.is_number_integer(); })) {
      throw TaskFileError(at + ": expected four integers [x, y, z, color]");
    }
    const int x = e[0].get<int>(), y = e[1].get<int>(), z = e[2].get<int>(), c = e[3].get<int>();
    if (x < 0 || x >= kSizeX) throw TaskFileError(at + ": x=" + std::to_string(x) + " outside [0, 10]");
    if (y < 0 || y >= kSizeY) throw TaskFileError(at + ": y=" + std::to_string(y) + " outside [0, 8]");
    if (z < 0 || z >= kSizeZ) throw TaskFileError(at + ": z=" + std::to_string(z) + " outside [0, 10]");
    if (c < 1 || c > kNumColors)
      throw TaskFileError(at + ": color " + std::to_string(c) + " outside [1, 6]");
    out.push_back({{x, y, z}, BlockColor(c)});
  }
  return out;
}

inline nlohmann::json task_to_json(const TaskRecord& t) {
  nlohmann::json j;
  j["task_id"] = t.task_id;
  j["starting_blocks"] = blocks_to_json(t.starting_grid);
  j["target_blocks"] = blocks_to_json(t.target_grid);
  j["instruction"] = t.instruction;
  j["context_utterances"] = t.context_utterances;
  auto skills = nlohmann::json::array();
  for (auto s : t.skills) skills.push_back(skill_name(s));
  j["skills"] = skills;
  return j;
}

inline TaskRecord task_from_json(const nlohmann::json& j, const std::string& where,
                                 std::vector<std::string>* warnings = nullptr) {
  if (!j.is_object()) throw TaskFileError(where + ": expected an object");
  TaskRecord t;
  if (!j.contains("task_id") || !j["task_id"].is_string())
    throw TaskFileError(where + ".task_id: missing or not a string");
  t.task_id = j["task_id"].get<std::string>();

  if (j.contains("starting_blocks") && j.contains("context_segments"))
    throw TaskFileError(where + ": give either starting_blocks or context_segments, not both");
  if (j.contains("starting_blocks")) {
    t.starting_grid = Grid::from_blocks(blocks_from_json(j["starting_blocks"], where + ".starting_blocks"));
  } else if (j.contains("context_segments")) {
    const auto& segs = j["context_segments"];
    if (!segs.is_array()) throw TaskFileError(where + ".context_segments: expected a list");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      for (const auto& b : blocks_from_json(segs[i], where + ".context_segments[" + std::to_string(i) + "]"))
        t.starting_grid.set(b.cell, b.color);
    }
  }
  if (!j.contains("target_blocks")) throw TaskFileError(where + ".target_blocks: missing");
  t.target_grid = Grid::from_blocks(blocks_from_json(j["target_blocks"], where + ".target_blocks"));
  if (t.target_grid.empty()) throw TaskFileError(where + ".target_blocks: target structure is empty");

  if (j.contains("instruction")) {
    if (!j["instruction"].is_string()) throw TaskFileError(where + ".instruction: not a string");
    t.instruction = j["instruction"].get<std::string>();
  }
  if (j.contains("context_utterances")) {
    const auto& u = j["context_utterances"];
    if (!u.is_array() || !std::all_of(u.begin(), u.end(), [](const auto& v) { return v.is_string(); }))
      throw TaskFileError(where + ".context_utterances: expected a list of strings");
    t.context_utterances = u.get<std::vector<std::string>>();
  }

  t.skills = label_skills(t.target_grid);
  if (j.contains("skills") && warnings != nullptr) {
    std::vector<SkillLabel> given;
    for (const auto& s : j["skills"]) {
      auto parsed = s.is_string() ? parse_skill(s.get<std::string>()) : std::nullopt;
      if (!parsed) {
        warnings->push_back(where + ".skills: unknown label " + s.dump());
        continue;
      }
      given.push_back(*parsed);
    }
    std::sort(given.begin(), given.end());
    auto computed = t.skills;
    std::sort(computed.begin(), computed.end());
    if (given != computed) {
      std::string msg = where + ".skills: file labels differ from computed labels [";
      for (std::size_t i = 0; i < t.skills.size(); ++i) msg += (i ? ", " : "") + skill_name(t.skills[i]);
      warnings->push_back(msg + "]; using computed labels");
    }
  }
  return t;
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Convert the byte offset into a line/column position.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw TaskFileError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                        ": malformed JSON");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TaskFileError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accepts a list of tasks, {"tasks": [...]}, or a single task object.
inline std::vector<TaskRecord> tasks_from_json(const nlohmann::json& j, const std::string& source,
                                               std::vector<std::string>* warnings = nullptr) {
  const nlohmann::json* list = &j;
  if (j.is_object() && j.contains("tasks")) list = &j["tasks"];
  std::vector<TaskRecord> out;
  if (list->is_array()) {
    for (std::size_t i = 0; i < list->size(); ++i)
      out.push_back(task_from_json((*list)[i], source + ": tasks[" + std::to_string(i) + "]", warnings));
  } else {
    out.push_back(task_from_json(*list, source + ": task", warnings));
  }
  return out;
}

inline std::vector<TaskRecord> load_tasks(const std::string& path,
                                          std::vector<std::string>* warnings = nullptr) {
  return tasks_from_json(parse_json_text(read_text_file(path), path), path, warnings);
}

inline void save_tasks(const std::vector<TaskRecord>& tasks, const std::string& path) {
  auto arr = nlohmann::json::array();
  for (const auto& t : tasks) arr.push_back(task_to_json(t));
  std::ofstream out(path);
  if (!out) throw TaskFileError(path + ": cannot open for writing");
  out << arr.dump(2) << '\n';
}

}  // namespace iglu
