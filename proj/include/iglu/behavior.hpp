#pragma once

// Raw game-log records: parsing (JSON or the single-quoted Python-literal
// variant), lossless re-serialization, replay onto a grid, conversion into
// per-step demonstration trajectories, and recording of environment episodes
// back into the same format.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "iglu/env.hpp"
#include "iglu/pose.hpp"
#include "iglu/voxel.hpp"

namespace iglu {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";  // keep it a float literal
  return s;
}

struct RawBlockChange {
  int x = 0, y = 0, z = 0;
  int old_id = 0, new_id = 0;
  friend bool operator==(const RawBlockChange&, const RawBlockChange&) = default;
};

struct TapeEvent {
  enum class Kind : std::uint8_t { Action, BlockChange, PosChange, SetLook, Elision, Unknown };
  Kind kind = Kind::Unknown;
  std::string name;               // action name
  std::vector<std::string> args;  // action arguments, verbatim tokens
  std::vector<RawBlockChange> changes;
  std::array<double, 3> pos{};
  std::array<double, 2> look{};  // pitch, yaw in the record's unit
  std::string raw_line;          // original text, trimmed; ignored by ==

  friend bool operator==(const TapeEvent& a, const TapeEvent& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Action: return a.name == b.name && a.args == b.args;
      case Kind::BlockChange: return a.changes == b.changes;
      case Kind::PosChange: return a.pos == b.pos;
      case Kind::SetLook: return a.look == b.look;
      case Kind::Elision: return true;
      case Kind::Unknown: return a.raw_line == b.raw_line;
    }
    return false;
  }
};

inline std::string event_to_line(const TapeEvent& e) {
  std::string out;
  switch (e.kind) {
    case TapeEvent::Kind::Action:
      out = "action " + e.name;
      for (const auto& a : e.args) out += " " + a;
      return out;
    case TapeEvent::Kind::BlockChange:
      out = "block_change ";
      for (const auto& c : e.changes)
        out += " (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ", " + std::to_string(c.z) + ", " +
               std::to_string(c.old_id) + ", " + std::to_string(c.new_id) + ")";
      return out;
    case TapeEvent::Kind::PosChange:
      return "pos_change (" + format_double(e.pos[0]) + ", " + format_double(e.pos[1]) + ", " +
             format_double(e.pos[2]) + ")";
    case TapeEvent::Kind::SetLook:
      return "set_look (" + format_double(e.look[0]) + ", " + format_double(e.look[1]) + ")";
    case TapeEvent::Kind::Elision: return "...";
    case TapeEvent::Kind::Unknown: return e.raw_line;
  }
  return out;
}

inline TapeEvent make_action(std::string name, std::vector<std::string> args = {}) {
  TapeEvent e;
  e.kind = TapeEvent::Kind::Action;
  e.name = std::move(name);
  e.args = std::move(args);
  e.raw_line = event_to_line(e);
  return e;
}

struct BehaviorRecord {
  long long game_id = 0;
  long long step_id = 0;
  std::array<double, 3> avatar_pos{};
  std::array<double, 2> avatar_look{};
  std::vector<std::array<int, 4>> world_ending_blocks;
  std::optional<std::string> clarification_question;
  std::vector<TapeEvent> tape;
  nlohmann::json extra = nlohmann::json::object();  // unrecognised top-level keys, kept verbatim

  friend bool operator==(const BehaviorRecord&, const BehaviorRecord&) = default;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

struct Normalized {
  std::string text;
  std::vector<std::size_t> source_offset;  // per output byte
};

// Rewrites a Python-literal dict (single-quoted strings, None/True/False,
// trailing commas, raw newlines inside strings) into strict JSON. Plain JSON
// passes through unchanged apart from raw newlines inside strings.
inline Normalized normalize_literal(std::string_view src) {
  Normalized n;
  n.text.reserve(src.size() + 64);
  auto emit = [&](std::string_view s, std::size_t at) {
    for (char c : s) {
      n.text.push_back(c);
      n.source_offset.push_back(at);
    }
  };
  auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\'' || c == '"') {
      const char quote = c;
      emit("\"", i++);
      while (i < src.size() && src[i] != quote) {
        const char d = src[i];
        if (d == '\\' && i + 1 < src.size()) {
          if (src[i + 1] == '\'') {
            emit("'", i);
          } else {
            emit(src.substr(i, 2), i);
          }
          i += 2;
          continue;
        }
        if (d == '"') emit("\\\"", i);
        else if (d == '\n') emit("\\n", i);
        else if (d == '\r') emit("\\r", i);
        else if (d == '\t') emit("\\t", i);
        else emit(std::string_view(&src[i], 1), i);
        ++i;
      }
      if (i < src.size()) emit("\"", i++);
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < src.size() && std::isspace(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && (src[j] == '}' || src[j] == ']')) {
        ++i;  // trailing comma
        continue;
      }
    }
    if (std::isalpha(static_cast<unsigned char>(c)) && (i == 0 || !ident(src[i - 1]))) {
      std::size_t j = i;
      while (j < src.size() && ident(src[j])) ++j;
      const auto word = src.substr(i, j - i);
      if (word == "None") emit("null", i);
      else if (word == "True") emit("true", i);
      else if (word == "False") emit("false", i);
      else emit(word, i);
      i = j;
      continue;
    }
    emit(std::string_view(&src[i], 1), i);
    ++i;
  }
  return n;
}

inline std::pair<int, int> line_col(std::string_view text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

// Splits "(a, b, c) (d, e, f)" into tuples of number tokens.
inline std::vector<std::vector<std::string_view>> tuples(std::string_view s, std::size_t& bad_at) {
  std::vector<std::vector<std::string_view>> out;
  std::size_t i = 0;
  bad_at = std::string_view::npos;
  while (true) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    if (s[i] != '(') {
      bad_at = i;
      return out;
    }
    const auto close = s.find(')', i);
    if (close == std::string_view::npos) {
      bad_at = i;
      return out;
    }
    std::vector<std::string_view> parts;
    auto inner = s.substr(i + 1, close - i - 1);
    std::size_t start = 0;
    while (true) {
      const auto comma = inner.find(',', start);
      parts.push_back(trim(inner.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    out.push_back(std::move(parts));
    i = close + 1;
  }
  return out;
}

}  // namespace detail

// Parses one tape line. `line`/`col0` locate the line start for diagnostics.
inline TapeEvent parse_tape_line(std::string_view text, int line, int col0) {
  const auto trimmed = detail::trim(text);
  const int col = col0 + static_cast<int>(text.find_first_not_of(" \t\r"));
  TapeEvent e;
  e.raw_line = std::string(trimmed);
  auto fail = [&](std::size_t at, const std::string& msg) -> ParseError {
    return ParseError(line, col + static_cast<int>(at), msg);
  };
  const auto sp = trimmed.find_first_of(" \t");
  const auto head = trimmed.substr(0, sp);
  const auto rest = sp == std::string_view::npos ? std::string_view{} : trimmed.substr(sp);
  const std::size_t rest_at = sp == std::string_view::npos ? trimmed.size() : sp;

  if (trimmed == "..." || trimmed == "…") {
    e.kind = TapeEvent::Kind::Elision;
  } else if (head == "action") {
    e.kind = TapeEvent::Kind::Action;
    std::istringstream words{std::string(rest)};
    std::string w;
    if (!(words >> e.name)) throw fail(trimmed.size(), "action without a name");
    while (words >> w) e.args.push_back(w);
    if (e.name == "select_and_place_block") {
      if (e.args.size() < 4) throw fail(rest_at, "select_and_place_block needs an id and x y z");
      for (int k = 0; k < 4; ++k) {
        long long v = 0;
        if (!detail::parse_number(e.args[k], v))
          throw fail(trimmed.find(e.args[k], rest_at), "expected an integer, got '" + e.args[k] + "'");
      }
    }
  } else if (head == "block_change") {
    e.kind = TapeEvent::Kind::BlockChange;
    std::size_t bad = 0;
    const auto ts = detail::tuples(rest, bad);
    if (bad != std::string_view::npos) throw fail(rest_at + bad, "expected '(x, y, z, old, new)'");
    if (ts.empty()) throw fail(rest_at, "block_change without changes");
    for (const auto& t : ts) {
      if (t.size() != 5) throw fail(rest_at, "block change tuples have five integers");
      RawBlockChange c;
      int* fields[5] = {&c.x, &c.y, &c.z, &c.old_id, &c.new_id};
      for (int k = 0; k < 5; ++k)
        if (!detail::parse_number(t[k], *fields[k]))
          throw fail(static_cast<std::size_t>(t[k].data() - trimmed.data()), "expected an integer");
      e.changes.push_back(c);
    }
  } else if (head == "pos_change" || head == "set_look") {
    const bool pos = head == "pos_change";
    e.kind = pos ? TapeEvent::Kind::PosChange : TapeEvent::Kind::SetLook;
    std::size_t bad = 0;
    const auto ts = detail::tuples(rest, bad);
    const std::size_t want = pos ? 3 : 2;
    if (bad != std::string_view::npos || ts.size() != 1 || ts[0].size() != want)
      throw fail(rest_at, std::string(head) + " expects " + std::to_string(want) + " numbers in parentheses");
    for (std::size_t k = 0; k < want; ++k) {
      double& dst = pos ? e.pos[k] : e.look[k];
      if (!detail::parse_number(ts[0][k], dst) || !std::isfinite(dst))
        throw fail(static_cast<std::size_t>(ts[0][k].data() - trimmed.data()), "expected a number");
    }
  } else {
    e.kind = TapeEvent::Kind::Unknown;
  }
  return e;
}

// Parses a record; diagnostics carry line and column in `text`.
inline BehaviorRecord parse_record(std::string_view text) {
  const auto norm = detail::normalize_literal(text);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(norm.text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    const std::size_t src = at < norm.source_offset.size() ? norm.source_offset[at] : text.size();
    const auto [l, c] = detail::line_col(text, src);
    throw ParseError(l, c, "malformed record");
  }
  if (!j.is_object()) throw ParseError(1, 1, "record must be an object");

  auto key_pos = [&](const char* key) {
    for (const char q : {'\'', '"'}) {
      const auto p = text.find(std::string(1, q) + key + q);
      if (p != std::string_view::npos) return detail::line_col(text, p);
    }
    return std::pair<int, int>{1, 1};
  };
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw ParseError(1, 1, std::string("missing '") + key + "'");
    return j[key];
  };
  auto type_error = [&](const char* key, const std::string& what) {
    const auto [l, c] = key_pos(key);
    return ParseError(l, c, std::string("'") + key + "': " + what);
  };

  BehaviorRecord r;
  try {
    if (j.contains("gameId")) r.game_id = j["gameId"].get<long long>();
    if (j.contains("stepId")) r.step_id = j["stepId"].get<long long>();
  } catch (const nlohmann::json::exception&) {
    throw type_error("gameId", "ids must be integers");
  }
  if (j.contains("avatarInfo")) {
    const auto& a = j["avatarInfo"];
    try {
      const auto pos = a.at("pos").get<std::vector<double>>();
      const auto look = a.at("look").get<std::vector<double>>();
      if (pos.size() != 3 || look.size() != 2) throw std::invalid_argument("size");
      r.avatar_pos = {pos[0], pos[1], pos[2]};
      r.avatar_look = {look[0], look[1]};
    } catch (const std::exception&) {
      throw type_error("avatarInfo", "expected pos [x, y, z] and look [pitch, yaw]");
    }
  }
  const auto& wes = require("worldEndingState");
  if (!wes.is_object() || !wes.contains("blocks") || !wes["blocks"].is_array())
    throw type_error("worldEndingState", "expected {'blocks': [[x, y, z, id], ...]}");
  for (const auto& b : wes["blocks"]) {
    if (!b.is_array() || b.size() != 4 ||
        !std::all_of(b.begin(), b.end(), [](const auto& v) { return v.is_number_integer(); }))
      throw type_error("worldEndingState", "blocks are [x, y, z, id] integer lists");
    r.world_ending_blocks.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()});
  }
  if (j.contains("clarification_question")) {
    const auto& q = j["clarification_question"];
    // Records write a missing question as the string 'null'.
    if (q.is_string() && q.get<std::string>() != "null") r.clarification_question = q.get<std::string>();
    else if (!q.is_null() && !q.is_string()) throw type_error("clarification_question", "expected text or null");
  }

  const auto& tape = require("tape");
  if (!tape.is_string()) throw type_error("tape", "expected a string");
  const auto tape_text = tape.get<std::string>();

  // Locate the tape string in the source so event diagnostics point at it.
  int line0 = 1, col0 = 1;
  bool literal_newlines = false;
  {
    auto [kl, kc] = key_pos("tape");
    line0 = kl;
    col0 = kc;
    for (const char q : {'\'', '"'}) {
      const auto k = text.find(std::string(1, q) + "tape" + q);
      if (k == std::string_view::npos) continue;
      const auto colon = text.find(':', k);
      const auto open = colon == std::string_view::npos ? colon : text.find_first_of("'\"", colon);
      if (open != std::string_view::npos) {
        std::tie(line0, col0) = detail::line_col(text, open + 1);
        const auto close = text.find(text[open], open + 1);
        literal_newlines = text.substr(open, close - open).find('\n') != std::string_view::npos;
      }
      break;
    }
  }
  std::size_t start = 0;
  int index = 0;
  while (start <= tape_text.size()) {
    auto nl = tape_text.find('\n', start);
    if (nl == std::string::npos) nl = tape_text.size();
    const std::string_view line(tape_text.data() + start, nl - start);
    if (!detail::trim(line).empty()) {
      const int l = literal_newlines ? line0 + index : line0;
      const int c = (literal_newlines && index > 0) ? 1 : col0;
      r.tape.push_back(parse_tape_line(line, l, c));
    }
    ++index;
    start = nl + 1;
  }
  if (r.tape.empty()) {
    throw type_error("tape", "tape is empty");
  }
  for (const auto& [k, v] : j.items()) {
    static const std::array<std::string_view, 6> known = {"gameId", "stepId", "avatarInfo", "worldEndingState",
                                                          "clarification_question", "tape"};
    if (std::find(known.begin(), known.end(), k) == known.end()) r.extra[k] = v;
  }
  return r;
}

// Canonical JSON form; parse_record(serialize_record(r)) == r.
// One parsed record or the reason it could not be parsed.
struct RecordParse {
  std::optional<BehaviorRecord> record;
  std::string error;
};

// A file holds one record object or a JSON array of them.
inline std::vector<RecordParse> parse_records(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos || text[first] != '[') {
    try {
      return {{parse_record(text), {}}};
    } catch (const ParseError& e) {
      return {{std::nullopt, e.what()}};
    }
  }
  const auto norm = detail::normalize_literal(text);
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(norm.text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    const std::size_t src = at < norm.source_offset.size() ? norm.source_offset[at] : text.size();
    const auto [l, c] = detail::line_col(text, src);
    return {{std::nullopt, ParseError(l, c, "malformed record list").what()}};
  }
  std::vector<RecordParse> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    try {
      out.push_back({parse_record(arr[i].dump()), {}});
    } catch (const ParseError& e) {
      out.push_back({std::nullopt, "record " + std::to_string(i) + ": " + e.what()});
    }
  }
  return out;
}

inline std::string serialize_record(const BehaviorRecord& r) {
  nlohmann::ordered_json j;
  j["gameId"] = r.game_id;
  j["stepId"] = r.step_id;
  j["avatarInfo"] = {{"pos", r.avatar_pos}, {"look", r.avatar_look}};
  j["worldEndingState"] = {{"blocks", r.world_ending_blocks}};
  j["clarification_question"] = r.clarification_question ? nlohmann::ordered_json(*r.clarification_question)
                                                          : nlohmann::ordered_json(nullptr);
  std::string tape = "\n";
  for (const auto& e : r.tape) tape += "   " + event_to_line(e) + "\n";
  j["tape"] = tape;
  for (const auto& [k, v] : r.extra.items()) j[k] = v;
  return j.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Id and coordinate mapping

struct IdOffsetMap {
  enum class LookUnit : std::uint8_t { Radians, Degrees };

  // Raw ids 50 and 59 appear in published logs; the rest complete the palette
  // so recorded episodes can be exported.
  std::map<int, BlockColor> ids{{50, kBlue}, {59, kGreen}, {51, kRed}, {52, kOrange}, {53, kPurple}, {54, kYellow}};
  int x_off = 0;
  int y_off = 63;
  int z_off = 0;
  LookUnit look_unit = LookUnit::Radians;

  BlockColor color(int raw) const {
    if (raw == 0) return kAir;
    auto it = ids.find(raw);
    if (it == ids.end()) throw ReplayError("unmapped block id " + std::to_string(raw));
    return it->second;
  }

  int raw_id(BlockColor c) const {
    if (c.is_air()) return 0;
    for (const auto& [raw, color] : ids)
      if (color == c) return raw;
    throw ReplayError("no raw id for color " + std::string(color_name(c)));
  }

  CellCoord cell(int x, int y, int z) const {
    const CellCoord c{x - x_off, y - y_off, z - z_off};
    if (!in_zone(c))
      throw ReplayError("raw (" + std::to_string(x) + ", " + std::to_string(y) + ", " + std::to_string(z) +
                        ") maps to " + to_string(c) + " outside the build zone");
    return c;
  }

  std::array<int, 3> raw_cell(const CellCoord& c) const { return {c.x + x_off, c.y + y_off, c.z + z_off}; }

  Vec3 position(const std::array<double, 3>& p) const { return {p[0] - x_off, p[1] - y_off, p[2] - z_off}; }
  std::array<double, 3> raw_position(double x, double y, double z) const { return {x + x_off, y + y_off, z + z_off}; }

  // (pitch, yaw) in degrees.
  std::pair<double, double> look_degrees(const std::array<double, 2>& l) const {
    if (look_unit == LookUnit::Degrees) return {l[0], l[1]};
    return {rad_to_deg(l[0]), rad_to_deg(l[1])};
  }
  std::array<double, 2> raw_look(double pitch_deg, double yaw_deg) const {
    if (look_unit == LookUnit::Degrees) return {pitch_deg, yaw_deg};
    return {deg_to_rad(pitch_deg), deg_to_rad(yaw_deg)};
  }
};

inline nlohmann::json id_map_to_json(const IdOffsetMap& m) {
  nlohmann::json ids = nlohmann::json::object();
  for (const auto& [raw, c] : m.ids) ids[std::to_string(raw)] = c.value();
  return {{"ids", ids},
          {"offset", {m.x_off, m.y_off, m.z_off}},
          {"look_unit", m.look_unit == IdOffsetMap::LookUnit::Degrees ? "degrees" : "radians"}};
}

inline IdOffsetMap id_map_from_json(const nlohmann::json& j) {
  IdOffsetMap m;
  try {
    if (j.contains("ids")) {
      m.ids.clear();
      for (const auto& [k, v] : j.at("ids").items()) {
        int raw = 0;
        if (!detail::parse_number(k, raw) || raw == 0) throw std::invalid_argument("id map: bad raw id '" + k + "'");
        const int c = v.get<int>();
        if (c < 1 || c > kNumColors) throw std::invalid_argument("id map: color " + std::to_string(c) + " outside [1, 6]");
        m.ids.emplace(raw, BlockColor(c));
      }
    }
    if (j.contains("offset")) {
      const auto o = j.at("offset").get<std::vector<int>>();
      if (o.size() != 3) throw std::invalid_argument("id map: offset needs three integers");
      m.x_off = o[0];
      m.y_off = o[1];
      m.z_off = o[2];
    }
    if (j.contains("look_unit")) {
      const auto u = j.at("look_unit").get<std::string>();
      if (u == "radians") m.look_unit = IdOffsetMap::LookUnit::Radians;
      else if (u == "degrees") m.look_unit = IdOffsetMap::LookUnit::Degrees;
      else throw std::invalid_argument("id map: unknown look_unit '" + u + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("id map: ") + e.what());
  }
  return m;
}

inline Grid ending_grid(const BehaviorRecord& r, const IdOffsetMap& m) {
  Grid g;
  for (const auto& b : r.world_ending_blocks) g.set(m.cell(b[0], b[1], b[2]), m.color(b[3]));
  return g;
}

// ---------------------------------------------------------------------------
// Replay

namespace detail {

struct PendingPlace {
  CellCoord cell;
  BlockColor color;
};

inline std::optional<PendingPlace> place_action(const TapeEvent& e, const IdOffsetMap& m) {
  if (e.kind != TapeEvent::Kind::Action || e.name != "select_and_place_block") return std::nullopt;
  int v[4];
  for (int k = 0; k < 4; ++k) parse_number(e.args[k], v[k]);
  return PendingPlace{m.cell(v[1], v[2], v[3]), m.color(v[0])};
}

}  // namespace detail

// Walks the tape, calling on_change for each grid edit in order. Placement
// actions apply tentatively; a later block_change describing the same edit
// confirms it silently, any other block_change is applied as written.
template <typename OnChange>
void walk_tape(const BehaviorRecord& r, const IdOffsetMap& m, Grid& grid, std::vector<std::string>* warnings,
               OnChange&& on_change) {
  std::vector<detail::PendingPlace> pending;
  for (std::size_t i = 0; i < r.tape.size(); ++i) {
    const auto& e = r.tape[i];
    if (auto p = detail::place_action(e, m)) {
      if (grid.solid(p->cell.x, p->cell.y, p->cell.z)) {
        if (warnings) warnings->push_back("tape event " + std::to_string(i) + ": placement into occupied " + to_string(p->cell));
        continue;
      }
      on_change(i, grid.set(p->cell, p->color));
      pending.push_back(*p);
      continue;
    }
    if (e.kind != TapeEvent::Kind::BlockChange) continue;
    for (const auto& c : e.changes) {
      const CellCoord cell = m.cell(c.x, c.y, c.z);
      const BlockColor old_color = m.color(c.old_id), new_color = m.color(c.new_id);
      auto match = std::find_if(pending.begin(), pending.end(), [&](const auto& p) {
        return p.cell == cell && p.color == new_color;
      });
      if (match != pending.end() && grid.get(cell) == new_color && old_color.is_air()) {
        pending.erase(match);
        continue;
      }
      if (grid.get(cell) != old_color && warnings) {
        warnings->push_back("tape event " + std::to_string(i) + ": block_change at " + to_string(cell) + " expects " +
                            std::string(color_name(old_color)) + " but grid has " +
                            std::string(color_name(grid.get(cell))));
      }
      if (grid.get(cell) != new_color) on_change(i, grid.set(cell, new_color));
    }
  }
}

inline Grid replay_tape(const BehaviorRecord& r, const IdOffsetMap& m = {}, std::vector<std::string>* warnings = nullptr) {
  Grid g;
  walk_tape(r, m, g, warnings, [](std::size_t, const BlockChange&) {});
  return g;
}

// ---------------------------------------------------------------------------
// Demonstration trajectories

// Largest pose jump folded into the surrounding steps: one movement step plus
// 0.15 blocks of drift. Anything larger is a teleport.
inline constexpr double kFoldDistance = Kinematics::kStep + 0.15;

struct TrajectoryStep {
  std::optional<Action> action;  // absent for annotations
  std::string annotation;        // "teleport", "block_change", "action:<name>", "elision"
  AgentPose pose;                // after the step
  std::optional<BlockChange> change;
  std::size_t tape_index = 0;
  Grid grid;                     // snapshot after the step
};

struct DemoTrajectory {
  long long game_id = 0;
  long long step_id = 0;
  Grid target;  // mapped ending state
  AgentPose start_pose;
  std::vector<TrajectoryStep> steps;
  std::vector<std::string> warnings;

  const Grid& final_grid() const { return steps.empty() ? empty_grid() : steps.back().grid; }

 private:
  static const Grid& empty_grid() {
    static const Grid g;
    return g;
  }
};

inline DemoTrajectory to_trajectory(const BehaviorRecord& r, const IdOffsetMap& m = {}) {
  DemoTrajectory t;
  t.game_id = r.game_id;
  t.step_id = r.step_id;
  t.target = ending_grid(r, m);

  AgentPose pose;
  {
    const Vec3 p = m.position(r.avatar_pos);
    const auto [pitch, yaw] = m.look_degrees(r.avatar_look);
    pose = {p.x, p.y, p.z, std::clamp(pitch, -90.0, 90.0), wrap_yaw(yaw), 0.0};
  }
  t.start_pose = pose;
  Grid grid;
  int selected = 1;

  auto push = [&](std::optional<Action> a, std::string note, std::size_t idx, std::optional<BlockChange> ch = {}) {
    t.steps.push_back({a, std::move(note), pose, ch, idx, grid});
  };

  // Grid edits are discovered via walk_tape so replay and conversion share
  // one interpretation; index them by tape position.
  std::multimap<std::size_t, BlockChange> edits;
  {
    Grid scratch;
    walk_tape(r, m, scratch, &t.warnings, [&](std::size_t i, const BlockChange& c) { edits.emplace(i, c); });
  }

  for (std::size_t i = 0; i < r.tape.size(); ++i) {
    const auto& e = r.tape[i];
    auto [lo, hi] = edits.equal_range(i);
    switch (e.kind) {
      case TapeEvent::Kind::Action: {
        if (e.name == "select_and_place_block") {
          for (auto it = lo; it != hi; ++it) {
            const int c = it->second.new_color.value();
            if (c != selected) {
              push(Action{select_verb(BlockColor(c))}, "", i);
              selected = c;
            }
            grid.set(it->second.cell, it->second.new_color);
            push(Action{Verb::PlaceBlock}, "", i, it->second);
          }
          break;
        }
        if (auto v = parse_verb(e.name); v && *v != Verb::EndEpisode) {
          if (is_select(*v)) selected = static_cast<int>(*v) - static_cast<int>(Verb::Select1) + 1;
          push(Action{*v}, "", i);
        } else {
          push(std::nullopt, "action:" + e.name, i);
        }
        break;
      }
      case TapeEvent::Kind::BlockChange:
        for (auto it = lo; it != hi; ++it) {
          grid.set(it->second.cell, it->second.new_color);
          push(std::nullopt, "block_change", i, it->second);
        }
        break;
      case TapeEvent::Kind::PosChange: {
        const Vec3 p = m.position(e.pos);
        const double d = std::hypot(p.x - pose.x, p.y - pose.y, p.z - pose.z);
        pose.x = p.x;
        pose.y = p.y;
        pose.z = p.z;
        if (d > kFoldDistance) {
          push(std::nullopt, "teleport", i);
        } else if (!t.steps.empty()) {
          t.steps.back().pose = pose;  // drift belongs to the preceding step
        } else {
          t.start_pose = pose;
        }
        break;
      }
      case TapeEvent::Kind::SetLook: {
        const auto [pitch, yaw] = m.look_degrees(e.look);
        const double dp = std::clamp(pitch, -90.0, 90.0) - pose.pitch;
        const double dy = wrap_signed(yaw - pose.yaw);
        const double lim = Kinematics::kCameraLimit;
        const int n = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dp), std::abs(dy)) / lim - 1e-9)));
        const double sp = dp / n, sy = dy / n;
        for (int k = 0; k < n; ++k) {
          pose.pitch = std::clamp(pose.pitch + sp, -90.0, 90.0);
          pose.yaw = wrap_yaw(pose.yaw + sy);
          push(Action{Verb::Noop, sp, sy}, "", i);
        }
        break;
      }
      case TapeEvent::Kind::Elision: push(std::nullopt, "elision", i); break;
      case TapeEvent::Kind::Unknown: push(std::nullopt, "unknown:" + e.raw_line, i); break;
    }
  }
  if (t.final_grid() != t.target) {
    t.warnings.push_back("replayed grid has " + std::to_string(t.final_grid().nonzero_count()) +
                         " blocks; the record's ending state has " + std::to_string(t.target.nonzero_count()));
  }
  return t;
}

inline nlohmann::json action_to_json(const Action& a) {
  return {{"verb", verb_name(a.verb)}, {"camera", {a.camera_pitch, a.camera_yaw}}};
}

inline Action action_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("verb")) throw std::invalid_argument("action needs a 'verb'");
  Action a;
  const auto& v = j["verb"];
  if (v.is_string()) {
    auto parsed = parse_verb(v.get<std::string>());
    if (!parsed) throw std::invalid_argument("unknown verb '" + v.get<std::string>() + "'");
    a.verb = *parsed;
  } else if (v.is_number_integer()) {
    const int k = v.get<int>();
    if (k < 0 || k >= static_cast<int>(kVerbNames.size())) throw std::invalid_argument("verb index out of range");
    a.verb = static_cast<Verb>(k);
  } else {
    throw std::invalid_argument("verb must be a name or an index");
  }
  if (j.contains("camera")) {
    const auto& c = j["camera"];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
      throw std::invalid_argument("camera must be [dpitch, dyaw]");
    a.camera_pitch = c[0].get<double>();
    a.camera_yaw = c[1].get<double>();
  }
  return a;
}

inline nlohmann::json change_to_json(const BlockChange& c) {
  return {c.cell.x, c.cell.y, c.cell.z, c.old_color.value(), c.new_color.value()};
}

// Task id shared by converted demos and the task file written next to them.
inline std::string demo_task_id(long long game_id, long long step_id) {
  return "game-" + std::to_string(game_id) + "-step-" + std::to_string(step_id);
}

// One JSON object per step.
inline std::vector<std::string> trajectory_jsonl(const DemoTrajectory& t) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    nlohmann::ordered_json j;
    j["task_id"] = demo_task_id(t.game_id, t.step_id);
    j["game_id"] = t.game_id;
    j["step_id"] = t.step_id;
    j["index"] = i;
    j["tape_index"] = s.tape_index;
    j["action"] = s.action ? nlohmann::ordered_json(action_to_json(*s.action)) : nlohmann::ordered_json(nullptr);
    j["annotation"] = s.annotation.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(s.annotation);
    j["pose"] = {s.pose.x, s.pose.y, s.pose.z, s.pose.pitch, s.pose.yaw};
    j["change"] = s.change ? nlohmann::ordered_json(change_to_json(*s.change)) : nlohmann::ordered_json(nullptr);
    j["blocks"] = blocks_to_json(s.grid);
    lines.push_back(j.dump());
  }
  return lines;
}

// ---------------------------------------------------------------------------
// Recording environment episodes in the same format

class TapeRecorder {
 public:
  explicit TapeRecorder(IdOffsetMap map = {}) : map_(std::move(map)) {}

  void begin(long long game_id, const Grid& starting, const AgentPose& pose) {
    rec_ = BehaviorRecord{};
    rec_.game_id = game_id;
    rec_.step_id = 1;
    rec_.avatar_pos = map_.raw_position(pose.x, pose.y, pose.z);
    rec_.avatar_look = map_.raw_look(pose.pitch, pose.yaw);
    last_ = pose;
    rec_.tape.push_back(make_action("start_recover_world_state"));
    std::vector<RawBlockChange> init;
    for (const auto& b : starting.blocks()) {
      const auto raw = map_.raw_cell(b.cell);
      init.push_back({raw[0], raw[1], raw[2], 0, map_.raw_id(b.color)});
    }
    if (!init.empty()) push_changes(std::move(init));
    rec_.tape.push_back(make_action("finish_recover_world_state"));
  }

  void record(const Action& a, const StepResult& r, const AgentPose& pose) {
    if (a.verb == Verb::PlaceBlock && r.info.change) {
      const auto raw = map_.raw_cell(r.info.change->cell);
      rec_.tape.push_back(make_action("select_and_place_block",
                                      {std::to_string(map_.raw_id(r.info.change->new_color)), std::to_string(raw[0]),
                                       std::to_string(raw[1]), std::to_string(raw[2])}));
    } else {
      rec_.tape.push_back(make_action(std::string(verb_name(a.verb))));
    }
    if (r.info.change) {
      const auto& c = *r.info.change;
      const auto raw = map_.raw_cell(c.cell);
      push_changes({{raw[0], raw[1], raw[2], map_.raw_id(c.old_color), map_.raw_id(c.new_color)}});
    }
    if (pose.x != last_.x || pose.y != last_.y || pose.z != last_.z) {
      TapeEvent e;
      e.kind = TapeEvent::Kind::PosChange;
      e.pos = map_.raw_position(pose.x, pose.y, pose.z);
      e.raw_line = event_to_line(e);
      rec_.tape.push_back(e);
    }
    if (pose.pitch != last_.pitch || pose.yaw != last_.yaw) {
      TapeEvent e;
      e.kind = TapeEvent::Kind::SetLook;
      e.look = map_.raw_look(pose.pitch, pose.yaw);
      e.raw_line = event_to_line(e);
      rec_.tape.push_back(e);
    }
    last_ = pose;
  }

  BehaviorRecord finish(const Grid& final_grid, const std::string& instruction = {},
                        std::optional<std::string> clarification = std::nullopt) const {
    BehaviorRecord out = rec_;
    for (const auto& b : final_grid.blocks()) {
      const auto raw = map_.raw_cell(b.cell);
      out.world_ending_blocks.push_back({raw[0], raw[1], raw[2], map_.raw_id(b.color)});
    }
    out.clarification_question = std::move(clarification);
    if (!instruction.empty()) out.extra["instruction"] = instruction;
    return out;
  }

  const IdOffsetMap& map() const { return map_; }

 private:
  void push_changes(std::vector<RawBlockChange> changes) {
    TapeEvent e;
    e.kind = TapeEvent::Kind::BlockChange;
    e.changes = std::move(changes);
    e.raw_line = event_to_line(e);
    rec_.tape.push_back(e);
  }

  IdOffsetMap map_;
  BehaviorRecord rec_;
  AgentPose last_;
};

}  // namespace iglu
