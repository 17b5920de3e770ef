#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace rvla::sim {

inline constexpr int kEpisodeCap = 60;
inline constexpr int kHorizon = 5;
inline constexpr int kActionDim = 3;
inline constexpr int kChunkSize = kHorizon * kActionDim;
inline constexpr double kMoveScale = 0.05;
inline constexpr double kGraspRadius = 0.06;
inline constexpr double kSuccessRadius = 0.06;
inline constexpr double kExpertRadius = 0.05;
inline constexpr double kMinSeparation = 0.15;

enum class ShapeKind : std::uint8_t { kSquare, kCircle };
enum class Color : std::uint8_t { kRed, kGreen, kBlue };

const char* shape_name(ShapeKind s);
const char* color_name(Color c);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

struct Object {
  int id = 0;
  ShapeKind shape = ShapeKind::kSquare;
  Color color = Color::kRed;
  Vec2 pos;
  friend bool operator==(const Object&, const Object&) = default;
};

struct Task {
  int target = 0;
  Vec2 goal;
  friend bool operator==(const Task&, const Task&) = default;
};

struct WorldState {
  Vec2 gripper{0.5, 0.1};
  int holding = -1;  // object id, -1 when empty
  std::vector<Object> objects;
  int step_count = 0;
  Task task;

  const Object& object(int id) const;
  Object& object(int id);
  const Object& target() const { return object(task.target); }
  Object& target_mut() { return object(task.target); }
  friend bool operator==(const WorldState&, const WorldState&) = default;
};

using Action = std::array<double, kActionDim>;
// Row-major H x 3, columns (dx, dy, grip).
using ActionChunk = std::array<double, kChunkSize>;

struct StepResult {
  bool done = false;
  bool success = false;
};

WorldState reset(std::uint64_t seed);

// Clamps a to [-1,1], moves, then applies push (an external displacement)
// before clipping to the unit square. Throws ContractError at the cap.
StepResult step(WorldState& s, Action a, Vec2 push = {});

bool is_success(const WorldState& s);

Action expert_action(const WorldState& s);

// Places count points in [lo,hi]^2 with pairwise separation sep from each
// other and from the fixed points; 100 tries per point, then sep shrinks.
template <class Rng>
std::vector<Vec2> place_points(Rng& rng, int count, double lo, double hi, double sep,
                               const std::vector<Vec2>& fixed);

}  // namespace rvla::sim

#include "rvla/manipsim/world_impl.hpp"
