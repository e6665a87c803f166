#pragma once

// Build-zone block grid, coordinate conventions, grid transforms,
// connectivity and ray traversal.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace iglu {

// Zone size. Axis order everywhere in the library is (y, x, z), y vertical.
inline constexpr int kSizeX = 11;
inline constexpr int kSizeY = 9;
inline constexpr int kSizeZ = 11;
inline constexpr int kCellCount = kSizeX * kSizeY * kSizeZ;
inline constexpr int kNumColors = 6;

class BlockColor {
 public:
  constexpr BlockColor() = default;
  constexpr explicit BlockColor(int v) : value_(static_cast<std::uint8_t>(v)) {
    if (v < 0 || v > kNumColors) {
      throw std::out_of_range("block color " + std::to_string(v) + " outside [0, 6]");
    }
  }

  constexpr int value() const { return value_; }
  constexpr bool is_air() const { return value_ == 0; }

  friend constexpr bool operator==(BlockColor, BlockColor) = default;

 private:
  std::uint8_t value_ = 0;
};

inline constexpr BlockColor kAir{0};
inline constexpr BlockColor kBlue{1};
inline constexpr BlockColor kGreen{2};
inline constexpr BlockColor kRed{3};
inline constexpr BlockColor kOrange{4};
inline constexpr BlockColor kPurple{5};
inline constexpr BlockColor kYellow{6};

inline std::string_view color_name(BlockColor c) {
  static constexpr std::array<std::string_view, 7> names = {
      "air", "blue", "green", "red", "orange", "purple", "yellow"};
  return names[static_cast<std::size_t>(c.value())];
}

struct CellCoord {
  int x = 0;
  int y = 0;
  int z = 0;

  friend constexpr bool operator==(const CellCoord&, const CellCoord&) = default;
  friend constexpr auto operator<=>(const CellCoord& a, const CellCoord& b) {
    // (y, x, z) lexicographic, the canonical serialization order.
    if (auto c = a.y <=> b.y; c != 0) return c;
    if (auto c = a.x <=> b.x; c != 0) return c;
    return a.z <=> b.z;
  }
};

constexpr bool in_zone(const CellCoord& c) {
  return c.x >= 0 && c.x < kSizeX && c.y >= 0 && c.y < kSizeY && c.z >= 0 && c.z < kSizeZ;
}

inline std::string to_string(const CellCoord& c) {
  return "(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ", " + std::to_string(c.z) + ")";
}

inline void check_in_zone(const CellCoord& c) {
  if (!in_zone(c)) {
    throw std::out_of_range("cell " + to_string(c) + " outside the 11x9x11 build zone");
  }
}

constexpr int cell_index(int x, int y, int z) { return (y * kSizeX + x) * kSizeZ + z; }

struct BlockChange {
  CellCoord cell;
  BlockColor old_color;
  BlockColor new_color;

  friend bool operator==(const BlockChange&, const BlockChange&) = default;
};

// A placed block as it appears in task files and wire messages.
struct Block {
  CellCoord cell;
  BlockColor color;

  friend bool operator==(const Block&, const Block&) = default;
};

class Grid {
 public:
  Grid() { cells_.fill(0); }

  BlockColor get(const CellCoord& c) const {
    check_in_zone(c);
    return BlockColor(cells_[cell_index(c.x, c.y, c.z)]);
  }

  // Unchecked accessors for hot loops; callers guarantee in-zone indices.
  std::uint8_t raw(int x, int y, int z) const { return cells_[cell_index(x, y, z)]; }
  bool solid(int x, int y, int z) const { return cells_[cell_index(x, y, z)] != 0; }

  // Cells outside the zone read as air.
  bool occupied(int x, int y, int z) const {
    return in_zone({x, y, z}) && cells_[cell_index(x, y, z)] != 0;
  }

  BlockChange set(const CellCoord& c, BlockColor v) {
    check_in_zone(c);
    auto& slot = cells_[cell_index(c.x, c.y, c.z)];
    BlockChange change{c, BlockColor(slot), v};
    if (slot != 0) --nonzero_;
    if (v.value() != 0) ++nonzero_;
    slot = static_cast<std::uint8_t>(v.value());
    return change;
  }

  int nonzero_count() const { return nonzero_; }
  bool empty() const { return nonzero_ == 0; }

  std::array<int, kNumColors + 1> color_counts() const {
    std::array<int, kNumColors + 1> counts{};
    for (auto v : cells_) ++counts[v];
    return counts;
  }

  // Nonzero cells in (y, x, z) lexicographic order.
  std::vector<Block> blocks() const {
    std::vector<Block> out;
    out.reserve(static_cast<std::size_t>(nonzero_));
    for (int y = 0; y < kSizeY; ++y)
      for (int x = 0; x < kSizeX; ++x)
        for (int z = 0; z < kSizeZ; ++z)
          if (auto v = raw(x, y, z); v != 0) out.push_back({{x, y, z}, BlockColor(v)});
    return out;
  }

  static Grid from_blocks(const std::vector<Block>& blocks) {
    Grid g;
    for (const auto& b : blocks) g.set(b.cell, b.color);
    return g;
  }

  const std::array<std::uint8_t, kCellCount>& data() const { return cells_; }

  friend bool operator==(const Grid& a, const Grid& b) { return a.cells_ == b.cells_; }

 private:
  std::array<std::uint8_t, kCellCount> cells_;
  int nonzero_ = 0;
};

// Horizontal 90-degree rotation about the zone center: (x, z) -> (z, X-1-x).
constexpr CellCoord rotate_cell_y90(const CellCoord& c) { return {c.z, c.y, kSizeX - 1 - c.x}; }

constexpr CellCoord rotate_cell_y90(const CellCoord& c, int times) {
  CellCoord r = c;
  for (int i = 0; i < (times & 3); ++i) r = rotate_cell_y90(r);
  return r;
}

inline Grid rotate_y90(const Grid& g) {
  static_assert(kSizeX == kSizeZ, "rotation requires a square footprint");
  Grid out;
  for (const auto& b : g.blocks()) out.set(rotate_cell_y90(b.cell), b.color);
  return out;
}

// Shift blocks by (dx, dz); blocks leaving the zone are dropped.
inline Grid translate_xz(const Grid& g, int dx, int dz) {
  Grid out;
  for (const auto& b : g.blocks()) {
    CellCoord c{b.cell.x + dx, b.cell.y, b.cell.z + dz};
    if (in_zone(c)) out.set(c, b.color);
  }
  return out;
}

inline constexpr std::array<CellCoord, 6> kFaceNeighbors = {
    CellCoord{1, 0, 0}, CellCoord{-1, 0, 0}, CellCoord{0, 1, 0},
    CellCoord{0, -1, 0}, CellCoord{0, 0, 1}, CellCoord{0, 0, -1}};

// 6-connected components of the nonzero cells, each sorted, ordered by
// their first cell.
inline std::vector<std::vector<CellCoord>> connected_components(const Grid& g) {
  std::array<bool, kCellCount> seen{};
  std::vector<std::vector<CellCoord>> out;
  std::vector<CellCoord> stack;
  for (const auto& b : g.blocks()) {
    const auto& start = b.cell;
    if (seen[cell_index(start.x, start.y, start.z)]) continue;
    std::vector<CellCoord> comp;
    seen[cell_index(start.x, start.y, start.z)] = true;
    stack.push_back(start);
    while (!stack.empty()) {
      CellCoord c = stack.back();
      stack.pop_back();
      comp.push_back(c);
      for (const auto& d : kFaceNeighbors) {
        CellCoord n{c.x + d.x, c.y + d.y, c.z + d.z};
        if (!in_zone(n) || !g.solid(n.x, n.y, n.z)) continue;
        auto& s = seen[cell_index(n.x, n.y, n.z)];
        if (!s) {
          s = true;
          stack.push_back(n);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 normalized() const {
    double n = norm();
    return {x / n, y / n, z / n};
  }
};

enum class Face : std::uint8_t { PosX, NegX, PosY, NegY, PosZ, NegZ };

constexpr CellCoord face_normal(Face f) {
  switch (f) {
    case Face::PosX: return {1, 0, 0};
    case Face::NegX: return {-1, 0, 0};
    case Face::PosY: return {0, 1, 0};
    case Face::NegY: return {0, -1, 0};
    case Face::PosZ: return {0, 0, 1};
    case Face::NegZ: return {0, 0, -1};
  }
  return {0, 0, 0};
}

struct RayHit {
  CellCoord cell;  // solid cell, or the y=0 cell of the column for ground hits
  Face face = Face::PosY;
  double distance = 0;
  bool ground = false;

  friend bool operator==(const RayHit&, const RayHit&) = default;
};

namespace detail {

// Parametric interval [t0, t1] where origin + t*dir lies inside the zone box.
inline bool clip_to_zone(const Vec3& o, const Vec3& d, double& t0, double& t1) {
  const double lo[3] = {0, 0, 0};
  const double hi[3] = {kSizeX, kSizeY, kSizeZ};
  const double os[3] = {o.x, o.y, o.z};
  const double ds[3] = {d.x, d.y, d.z};
  for (int a = 0; a < 3; ++a) {
    if (ds[a] == 0) {
      if (os[a] < lo[a] || os[a] >= hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - os[a]) / ds[a];
    double tb = (hi[a] - os[a]) / ds[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace detail

// First solid cell whose boundary the ray crosses within `reach`, walking
// cells in increasing distance (axis-boundary stepping). When no block is
// hit, a downward ray reports the ground plane y=0 if it meets it inside the
// zone footprint within reach.
inline std::optional<RayHit> raycast(const Grid& g, const Vec3& origin, const Vec3& dir,
                                     double reach, bool ground_hits = true) {
  double t0 = 0, t1 = reach;
  if (detail::clip_to_zone(origin, dir, t0, t1)) {
    Vec3 p = origin + dir * t0;
    int cell[3] = {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y)),
                   static_cast<int>(std::floor(p.z))};
    const int size[3] = {kSizeX, kSizeY, kSizeZ};
    const double ds[3] = {dir.x, dir.y, dir.z};
    const double os[3] = {origin.x, origin.y, origin.z};
    int step[3];
    double t_max[3], t_delta[3];
    // Face entered first: at t0 the entry axis is whichever slab bound produced t0.
    int entry_axis = -1;
    for (int a = 0; a < 3; ++a) {
      cell[a] = std::clamp(cell[a], 0, size[a] - 1);
      if (ds[a] > 0) {
        step[a] = 1;
        t_max[a] = (cell[a] + 1 - os[a]) / ds[a];
        t_delta[a] = 1.0 / ds[a];
        if (t0 > 0 && std::abs((cell[a] - os[a]) / ds[a] - t0) < 1e-12) entry_axis = a;
      } else if (ds[a] < 0) {
        step[a] = -1;
        t_max[a] = (cell[a] - os[a]) / ds[a];
        t_delta[a] = -1.0 / ds[a];
        if (t0 > 0 && std::abs((cell[a] + 1 - os[a]) / ds[a] - t0) < 1e-12) entry_axis = a;
      } else {
        step[a] = 0;
        t_max[a] = std::numeric_limits<double>::infinity();
        t_delta[a] = std::numeric_limits<double>::infinity();
      }
    }
    auto entry_face = [&](int axis) {
      if (axis < 0) {
        // Origin inside the cell: report the face opposing the dominant direction.
        double ax = std::abs(dir.x), ay = std::abs(dir.y), az = std::abs(dir.z);
        axis = (ax >= ay && ax >= az) ? 0 : (ay >= az ? 1 : 2);
      }
      const bool positive_step = ds[axis] > 0;
      switch (axis) {
        case 0: return positive_step ? Face::NegX : Face::PosX;
        case 1: return positive_step ? Face::NegY : Face::PosY;
        default: return positive_step ? Face::NegZ : Face::PosZ;
      }
    };
    double t = t0;
    while (t <= t1) {
      if (g.solid(cell[0], cell[1], cell[2])) {
        return RayHit{{cell[0], cell[1], cell[2]}, entry_face(entry_axis), t, false};
      }
      int a = (t_max[0] < t_max[1]) ? (t_max[0] < t_max[2] ? 0 : 2) : (t_max[1] < t_max[2] ? 1 : 2);
      t = t_max[a];
      cell[a] += step[a];
      if (cell[a] < 0 || cell[a] >= size[a]) break;
      t_max[a] += t_delta[a];
      entry_axis = a;
    }
  }
  if (ground_hits && dir.y < 0 && origin.y >= 0) {
    double tg = -origin.y / dir.y;
    if (tg <= reach) {
      Vec3 p = origin + dir * tg;
      int cx = static_cast<int>(std::floor(p.x));
      int cz = static_cast<int>(std::floor(p.z));
      if (in_zone({cx, 0, cz})) return RayHit{{cx, 0, cz}, Face::PosY, tg, true};
    }
  }
  return std::nullopt;
}

}  // namespace iglu
