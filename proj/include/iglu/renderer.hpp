#pragma once

// Software first-person voxel renderer for the 64x64 RGB observation.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iglu/pose.hpp"
#include "iglu/voxel.hpp"

namespace iglu {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Image {
  static constexpr int kWidth = 64;
  static constexpr int kHeight = 64;
  static constexpr int kChannels = 3;

  std::vector<std::uint8_t> pixels = std::vector<std::uint8_t>(kWidth * kHeight * kChannels, 0);

  Rgb at(int col, int row) const {
    const auto i = static_cast<std::size_t>((row * kWidth + col) * kChannels);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }

  friend bool operator==(const Image&, const Image&) = default;
};

struct CameraParams {
  double vertical_fov_deg = 70.0;
  double near_plane = 0.05;
  double far_plane = 32.0;
};

namespace palette {

inline constexpr Rgb kSky{150, 200, 245};
inline constexpr Rgb kGroundLight{120, 160, 95};
inline constexpr Rgb kGroundDark{95, 130, 75};

// Indexed by block color 1..6: blue, green, red, orange, purple, yellow.
inline constexpr std::array<Rgb, 7> kBlockBase = {{{0, 0, 0},
                                                   {45, 85, 225},
                                                   {60, 180, 75},
                                                   {220, 50, 50},
                                                   {245, 130, 50},
                                                   {145, 40, 180},
                                                   {250, 220, 30}}};

constexpr double face_brightness(Face f) {
  switch (f) {
    case Face::PosY: return 1.0;
    case Face::PosX:
    case Face::NegX: return 0.8;
    case Face::PosZ:
    case Face::NegZ: return 0.7;
    case Face::NegY: return 0.5;
  }
  return 1.0;
}

inline Rgb shade(BlockColor c, Face f) {
  const Rgb base = kBlockBase[static_cast<std::size_t>(c.value())];
  const double k = face_brightness(f);
  auto channel = [k](std::uint8_t v) { return static_cast<std::uint8_t>(std::lround(v * k)); };
  return {channel(base.r), channel(base.g), channel(base.b)};
}

}  // namespace palette

inline Image render(const AgentPose& pose, const Grid& grid, const CameraParams& cam = {}) {
  if (!(cam.vertical_fov_deg > 0 && cam.vertical_fov_deg < 180)) {
    throw std::invalid_argument("field of view must lie in (0, 180)");
  }
  Image img;
  const Vec3 eye = eye_position(pose);
  const Vec3 forward = view_direction(pose);
  const double yaw = deg_to_rad(pose.yaw);
  const Vec3 right{std::cos(yaw), 0.0, std::sin(yaw)};
  const Vec3 up{right.y * forward.z - right.z * forward.y, right.z * forward.x - right.x * forward.z,
                right.x * forward.y - right.y * forward.x};
  const double half = std::tan(deg_to_rad(cam.vertical_fov_deg) / 2.0);

  for (int row = 0; row < Image::kHeight; ++row) {
    const double py = (1.0 - 2.0 * (row + 0.5) / Image::kHeight) * half;
    for (int col = 0; col < Image::kWidth; ++col) {
      const double px = (2.0 * (col + 0.5) / Image::kWidth - 1.0) * half;
      const Vec3 dir = (forward + right * px + up * py).normalized();
      Rgb color = palette::kSky;
      const Vec3 start = eye + dir * cam.near_plane;
      if (auto hit = raycast(grid, start, dir, cam.far_plane - cam.near_plane, false)) {
        color = palette::shade(grid.get(hit->cell), hit->face);
      } else if (dir.y < 0) {
        // The ground plane is unbounded and not limited by the far plane.
        const double t = -eye.y / dir.y;
        const auto gx = static_cast<long long>(std::floor(eye.x + dir.x * t));
        const auto gz = static_cast<long long>(std::floor(eye.z + dir.z * t));
        color = ((gx + gz) & 1) ? palette::kGroundDark : palette::kGroundLight;
      }
      const auto i = static_cast<std::size_t>((row * Image::kWidth + col) * Image::kChannels);
      img.pixels[i] = color.r;
      img.pixels[i + 1] = color.g;
      img.pixels[i + 2] = color.b;
    }
  }
  return img;
}

// FNV-1a over the pixel bytes; a stable fingerprint for golden frames.
inline std::uint64_t image_digest(const Image& img) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : img.pixels) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

// Binary PPM (P6) dump.
inline void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "P6\n" << Image::kWidth << ' ' << Image::kHeight << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

}  // namespace iglu
