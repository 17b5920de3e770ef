#include "rvla/manipsim/render.hpp"

#include <algorithm>
#include <cmath>

namespace rvla::sim {

namespace {

constexpr double kObjectRadius = 0.055;
constexpr double kPadOuter = 0.085;
constexpr double kPadInner = 0.06;

struct Rgb {
  double r, g, b;
};

Rgb palette(Color c) {
  switch (c) {
    case Color::kRed: return {210, 40, 40};
    case Color::kGreen: return {40, 180, 50};
    case Color::kBlue: return {40, 70, 210};
  }
  return {0, 0, 0};
}

struct Pixel {
  Rgb rgb{kBackground, kBackground, kBackground};
  // Flat ground unless an object covers the pixel.
  double nx = 0.0, ny = 0.0, nz = 1.0;
};

Vec2 pixel_center(int row, int col) {
  return {(col + 0.5) / kImageSide, 1.0 - (row + 0.5) / kImageSide};
}

bool covers(const Object& o, Vec2 p) {
  const double dx = p.x - o.pos.x, dy = p.y - o.pos.y;
  if (o.shape == ShapeKind::kCircle) return dx * dx + dy * dy <= kObjectRadius * kObjectRadius;
  return std::abs(dx) <= kObjectRadius && std::abs(dy) <= kObjectRadius;
}

// hemispherical pseudo-normal over the object's footprint
void shade_object(Pixel& px, const Object& o, Vec2 p) {
  px.rgb = palette(o.color);
  double u = (p.x - o.pos.x) / kObjectRadius, v = (p.y - o.pos.y) / kObjectRadius;
  const double r2 = u * u + v * v;
  if (r2 > 1.0) {
    const double r = std::sqrt(r2);
    u /= r;
    v /= r;
  }
  px.nx = u;
  px.ny = v;
  px.nz = std::sqrt(std::max(0.0, 1.0 - u * u - v * v));
}

void store(Image& img, int row, int col, const Pixel& px, const LightingState& light) {
  const double k = brightness(light, px.nx, px.ny, px.nz);
  const double ch[3] = {px.rgb.r, px.rgb.g, px.rgb.b};
  for (int c = 0; c < 3; ++c)
    img.at(row, col, c) = static_cast<std::uint8_t>(std::clamp(std::round(ch[c] * k), 0.0, 255.0));
}

}  // namespace

double brightness(const LightingState& light, double nx, double ny, double nz) {
  const double ce = std::cos(light.elevation);
  const double lx = ce * std::cos(light.azimuth), ly = ce * std::sin(light.azimuth);
  const double lz = std::sin(light.elevation);
  const double ndotl = std::max(0.0, nx * lx + ny * ly + nz * lz);
  return std::clamp(light.ambient + light.diffuse * light.intensity * ndotl + light.specular, 0.0, 2.0);
}

Image render(const WorldState& s, const LightingState& light) {
  Image img;
  for (int row = 0; row < kImageSide; ++row) {
    for (int col = 0; col < kImageSide; ++col) {
      const Vec2 p = pixel_center(row, col);
      Pixel px;
      const double gx = std::abs(p.x - s.task.goal.x), gy = std::abs(p.y - s.task.goal.y);
      const double ring = std::max(gx, gy);
      if (ring <= kPadOuter && ring > kPadInner) px.rgb = {225, 210, 70};
      for (const Object& o : s.objects)
        if (covers(o, p)) shade_object(px, o, p);
      const double gdx = std::abs(p.x - s.gripper.x), gdy = std::abs(p.y - s.gripper.y);
      const double half = 1.0 / kImageSide;
      if ((gdx <= half && gdy <= 2.5 * half) || (gdy <= half && gdx <= 2.5 * half)) {
        const double shade = s.holding >= 0 ? 20.0 : 245.0;
        px.rgb = {shade, shade, shade};
        px.nx = px.ny = 0.0;
        px.nz = 1.0;
      }
      store(img, row, col, px, light);
    }
  }
  return img;
}

void draw_objects(Image& img, const std::vector<Object>& objects, const LightingState& light) {
  for (int row = 0; row < kImageSide; ++row) {
    for (int col = 0; col < kImageSide; ++col) {
      const Vec2 p = pixel_center(row, col);
      bool hit = false;
      Pixel px;
      for (const Object& o : objects) {
        if (!covers(o, p)) continue;
        shade_object(px, o, p);
        hit = true;
      }
      if (hit) store(img, row, col, px, light);
    }
  }
}

}  // namespace rvla::sim
