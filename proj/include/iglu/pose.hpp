#pragma once

#include <cmath>
#include <numbers>

#include "iglu/voxel.hpp"

namespace iglu {

// Agent body and motion constants, in blocks and blocks per step.
struct Kinematics {
  static constexpr double kStep = 0.25;
  static constexpr double kEyeHeight = 1.6;
  static constexpr double kHalfWidth = 0.3;
  static constexpr double kHeight = 1.8;
  static constexpr double kGravity = 0.08;
  static constexpr double kTerminalVelocity = 3.0;
  // Apex of 0.42 + 0.34 + ... + 0.02 = 1.32 blocks: clears one block, not two.
  static constexpr double kJumpVelocity = 0.42;
  static constexpr double kCameraLimit = 5.0;
  static constexpr double kReach = 3.0;
};

// Feet position and view angles. Yaw 0 looks toward -z, yaw 90 toward +x;
// positive pitch looks up.
struct AgentPose {
  double x = 5.5;
  double y = 0.0;
  double z = 5.5;
  double pitch = 0.0;
  double yaw = 0.0;
  double vertical_velocity = 0.0;

  friend bool operator==(const AgentPose&, const AgentPose&) = default;
};

constexpr double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

// Wraps to [0, 360).
inline double wrap_yaw(double yaw) {
  double w = std::fmod(yaw, 360.0);
  if (w < 0) w += 360.0;
  if (w >= 360.0) w = 0.0;
  return w;
}

// Wraps to (-180, 180].
inline double wrap_signed(double angle) {
  double w = std::fmod(angle, 360.0);
  if (w > 180.0) w -= 360.0;
  if (w <= -180.0) w += 360.0;
  return w;
}

inline Vec3 view_direction(double pitch_deg, double yaw_deg) {
  const double p = deg_to_rad(pitch_deg), y = deg_to_rad(yaw_deg);
  return {std::sin(y) * std::cos(p), std::sin(p), -std::cos(y) * std::cos(p)};
}

inline Vec3 view_direction(const AgentPose& pose) { return view_direction(pose.pitch, pose.yaw); }

inline Vec3 eye_position(const AgentPose& pose) {
  return {pose.x, pose.y + Kinematics::kEyeHeight, pose.z};
}

inline CellCoord feet_cell(const AgentPose& pose) {
  return {static_cast<int>(std::floor(pose.x)), static_cast<int>(std::floor(pose.y)),
          static_cast<int>(std::floor(pose.z))};
}

// Signed angle from the agent's heading to the bearing of the zone center;
// 0 when standing on the center axis.
inline double compass_angle(const AgentPose& pose) {
  const double cx = kSizeX / 2.0, cz = kSizeZ / 2.0;
  const double dx = cx - pose.x, dz = cz - pose.z;
  if (std::abs(dx) < 1e-9 && std::abs(dz) < 1e-9) return 0.0;
  const double bearing = rad_to_deg(std::atan2(dx, -dz));
  return wrap_signed(bearing - pose.yaw);
}

}  // namespace iglu
