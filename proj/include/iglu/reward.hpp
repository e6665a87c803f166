#pragma once

// Maximal-intersection structure metric (exhaustive and incremental),
// per-step reward, F1 scoring and the distance-shaped subtask reward.

#include <array>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "iglu/voxel.hpp"

namespace iglu {

inline constexpr int kMaxShift = kSizeX;  // translations span [-11, 11]
inline constexpr int kShiftCount = 2 * kMaxShift + 1;
inline constexpr int kAlignmentCount = 4 * kShiftCount * kShiftCount;

struct Alignment {
  int rotation = 0;  // number of 90-degree turns applied to the current grid
  int dx = 0;
  int dz = 0;

  friend bool operator==(const Alignment&, const Alignment&) = default;
};

struct IntersectionResult {
  int size = 0;
  Alignment best;
};

// Cell of `current` after rotating `a.rotation` times and shifting by (dx, dz).
constexpr CellCoord align_cell(const CellCoord& c, const Alignment& a) {
  CellCoord r = rotate_cell_y90(c, a.rotation);
  return {r.x + a.dx, r.y, r.z + a.dz};
}

// Exhaustive scan over all 4 x 23 x 23 alignments. A cell counts when the
// aligned current color equals a nonzero target color. Ties keep the first
// alignment in (rotation, dx, dz) ascending order.
inline IntersectionResult max_intersection_naive(const Grid& current, const Grid& target) {
  const auto blocks = current.blocks();
  IntersectionResult best;
  bool have = false;
  for (int r = 0; r < 4; ++r) {
    std::vector<CellCoord> rotated;
    rotated.reserve(blocks.size());
    for (const auto& b : blocks) rotated.push_back(rotate_cell_y90(b.cell, r));
    for (int dx = -kMaxShift; dx <= kMaxShift; ++dx) {
      for (int dz = -kMaxShift; dz <= kMaxShift; ++dz) {
        int count = 0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          const int x = rotated[i].x + dx;
          const int z = rotated[i].z + dz;
          if (x < 0 || x >= kSizeX || z < 0 || z >= kSizeZ) continue;
          if (target.raw(x, rotated[i].y, z) == blocks[i].color.value()) ++count;
        }
        if (!have || count > best.size) {
          best = {count, {r, dx, dz}};
          have = true;
        }
      }
    }
  }
  return best;
}

struct TrackerOptions {
  // Report the maximum only over alignments that keep every current block
  // inside the zone. Off by default, so the tracker matches the exhaustive scan.
  bool prune_cut_alignments = false;
};

// Per-alignment intersection counts maintained under single-cell changes.
class IntersectionTracker {
 public:
  IntersectionTracker(const Grid& target, const Grid& current, TrackerOptions opts = {})
      : target_(target), options_(opts) {
    for (const auto& b : target.blocks()) {
      layer_index_[layer_slot(b.cell.y, b.color.value())].push_back({b.cell.x, b.cell.z});
    }
    histogram_.assign(kCellCount + 1, 0);
    histogram_[0] = kAlignmentCount;
    for (const auto& b : current.blocks()) add(b.cell, b.color);
  }

  // Applies one observed change and returns the new maximum. A color switch
  // is treated as a removal followed by an addition.
  int apply(const BlockChange& change) {
    if (change.old_color == change.new_color) {
      throw std::invalid_argument("block change at " + to_string(change.cell) +
                                  " does not change the cell");
    }
    check_in_zone(change.cell);
    if (current_.get(change.cell) != change.old_color) {
      throw std::invalid_argument("block change at " + to_string(change.cell) +
                                  " disagrees with the tracked grid");
    }
    if (!change.old_color.is_air()) remove(change.cell, change.old_color);
    if (!change.new_color.is_air()) add(change.cell, change.new_color);
    return size();
  }

  int size() const {
    if (!options_.prune_cut_alignments) return max_;
    int best = 0;
    for (int i = 0; i < kAlignmentCount; ++i)
      if (cut_[i] == 0 && counts_[i] > best) best = counts_[i];
    return best;
  }

  IntersectionResult result() const {
    const int target_size = size();
    for (int i = 0; i < kAlignmentCount; ++i) {
      if (counts_[i] != target_size) continue;
      if (options_.prune_cut_alignments && cut_[i] != 0) continue;
      return {target_size, alignment_at(i)};
    }
    return {0, {}};
  }

  int count(const Alignment& a) const { return counts_[slot(a)]; }
  const Grid& current() const { return current_; }
  const Grid& target() const { return target_; }

 private:
  struct XZ {
    int x, z;
  };

  static constexpr int layer_slot(int y, int color) { return y * (kNumColors + 1) + color; }
  static constexpr int slot(const Alignment& a) {
    return (a.rotation * kShiftCount + (a.dx + kMaxShift)) * kShiftCount + (a.dz + kMaxShift);
  }
  static constexpr Alignment alignment_at(int i) {
    return {i / (kShiftCount * kShiftCount), (i / kShiftCount) % kShiftCount - kMaxShift,
            i % kShiftCount - kMaxShift};
  }

  void bump(int i, int delta) {
    --histogram_[counts_[i]];
    counts_[i] += delta;
    ++histogram_[counts_[i]];
    if (counts_[i] > max_) max_ = counts_[i];
    while (max_ > 0 && histogram_[max_] == 0) --max_;
  }

  void update(const CellCoord& c, BlockColor color, int delta) {
    const auto& matches = layer_index_[layer_slot(c.y, color.value())];
    for (int r = 0; r < 4; ++r) {
      const CellCoord rc = rotate_cell_y90(c, r);
      for (const auto& t : matches) bump(slot({r, t.x - rc.x, t.z - rc.z}), delta);
      if (options_.prune_cut_alignments) {
        for (int dx = -kMaxShift; dx <= kMaxShift; ++dx) {
          const bool x_out = rc.x + dx < 0 || rc.x + dx >= kSizeX;
          for (int dz = -kMaxShift; dz <= kMaxShift; ++dz) {
            if (x_out || rc.z + dz < 0 || rc.z + dz >= kSizeZ) cut_[slot({r, dx, dz})] += delta;
          }
        }
      }
    }
  }

  void add(const CellCoord& c, BlockColor color) {
    current_.set(c, color);
    update(c, color, +1);
  }

  void remove(const CellCoord& c, BlockColor color) {
    current_.set(c, kAir);
    update(c, color, -1);
  }

  Grid target_;
  Grid current_;
  TrackerOptions options_;
  std::array<std::vector<XZ>, kSizeY*(kNumColors + 1)> layer_index_;
  std::array<int, kAlignmentCount> counts_{};
  std::array<int, kAlignmentCount> cut_{};
  std::vector<int> histogram_;
  int max_ = 0;
};

// r_t = max_int_t - max_int_{t-1}
constexpr double step_reward(int prev_size, int new_size) {
  return static_cast<double>(new_size - prev_size);
}

enum class F1Alignment { Maximized, Identity };

struct F1Report {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  int intersection_size = 0;
  Alignment best_alignment;
};

// Both empty scores a perfect match; otherwise an empty side scores zero.
inline F1Report f1_from_counts(int intersection, int snapshot_size, int target_size) {
  F1Report r;
  r.intersection_size = intersection;
  if (snapshot_size == 0 && target_size == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  r.precision = snapshot_size > 0 ? static_cast<double>(intersection) / snapshot_size : 0.0;
  r.recall = target_size > 0 ? static_cast<double>(intersection) / target_size : 0.0;
  const double pr = r.precision + r.recall;
  r.f1 = pr > 0 ? 2.0 * r.precision * r.recall / pr : 0.0;
  return r;
}

inline int identity_intersection(const Grid& snapshot, const Grid& target) {
  int n = 0;
  const auto& a = snapshot.data();
  const auto& b = target.data();
  for (int i = 0; i < kCellCount; ++i)
    if (b[i] != 0 && a[i] == b[i]) ++n;
  return n;
}

inline F1Report f1_score(const Grid& snapshot, const Grid& target,
                         F1Alignment mode = F1Alignment::Maximized) {
  if (mode == F1Alignment::Identity) {
    return f1_from_counts(identity_intersection(snapshot, target), snapshot.nonzero_count(),
                          target.nonzero_count());
  }
  const auto best = max_intersection_naive(snapshot, target);
  auto r = f1_from_counts(best.size, snapshot.nonzero_count(), target.nonzero_count());
  r.best_alignment = best.best;
  return r;
}

// Reward for a placement at Manhattan distance d from the subtask cell.
struct ShapedRewardTable {
  std::array<double, 6> near = {1.0, 0.25, 0.05, 0.001, -0.0001, -0.001};
  double far_slope = 0.01;
  double under_feet_bonus = 0.5;

  double at(int d) const {
    if (d < 0) throw std::invalid_argument("negative distance");
    if (d < static_cast<int>(near.size())) return near[static_cast<std::size_t>(d)];
    return -far_slope * (d - 5);
  }
};

constexpr int manhattan(const CellCoord& a, const CellCoord& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z);
}

inline double shaped_reward(const CellCoord& placed, const CellCoord& subtask_target,
                            const CellCoord& agent_feet_cell, const ShapedRewardTable& table = {}) {
  double r = table.at(manhattan(placed, subtask_target));
  const bool under_feet = placed.x == agent_feet_cell.x && placed.z == agent_feet_cell.z &&
                          placed.y == agent_feet_cell.y - 1;
  if (placed == subtask_target && under_feet) r += table.under_feet_bonus;
  return r;
}

}  // namespace iglu
