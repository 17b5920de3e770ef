#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <vector>

#include "rvla/manipsim/world.hpp"

namespace rvla::sim {

inline constexpr int kImageSide = 32;
inline constexpr int kImageBytes = kImageSide * kImageSide * 3;
inline constexpr std::uint8_t kBackground = 120;

/// 32 x 32 RGB, row-major, interleaved channels. Row 0 is the top (y = 1).
struct Image {
  std::array<std::uint8_t, kImageBytes> px{};

  std::uint8_t& at(int row, int col, int ch) { return px[static_cast<std::size_t>((row * kImageSide + col) * 3 + ch)]; }
  std::uint8_t at(int row, int col, int ch) const {
    return px[static_cast<std::size_t>((row * kImageSide + col) * 3 + ch)];
  }
  friend bool operator==(const Image&, const Image&) = default;
};

struct LightingState {
  double intensity = 1.0;
  double azimuth = 0.0;
  double elevation = std::numbers::pi / 2.0;
  double ambient = 0.2;
  double diffuse = 0.8;
  double specular = 0.0;
};

// Phong brightness for a unit normal, clipped to [0, 2].
double brightness(const LightingState& light, double nx, double ny, double nz);

Image render(const WorldState& s, const LightingState& light = {});

// Paints objects over an existing image, shaded as render() would.
void draw_objects(Image& img, const std::vector<Object>& objects, const LightingState& light = {});

}  // namespace rvla::sim
