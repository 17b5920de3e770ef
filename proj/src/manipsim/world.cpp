#include "rvla/manipsim/world.hpp"

#include <algorithm>
#include <cmath>

#include "rvla/common/errors.hpp"
#include "rvla/common/random.hpp"

namespace rvla::sim {

const char* shape_name(ShapeKind s) { return s == ShapeKind::kSquare ? "square" : "circle"; }

const char* color_name(Color c) {
  switch (c) {
    case Color::kRed: return "red";
    case Color::kGreen: return "green";
    case Color::kBlue: return "blue";
  }
  return "red";
}

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

const Object& WorldState::object(int id) const {
  for (const Object& o : objects)
    if (o.id == id) return o;
  throw LookupError("no object with id " + std::to_string(id));
}

Object& WorldState::object(int id) {
  return const_cast<Object&>(static_cast<const WorldState&>(*this).object(id));
}

WorldState reset(std::uint64_t seed) {
  Stream rng(derive_seed(seed, {hash_tag("reset")}));
  WorldState s;
  const int count = rng.uniform_int(1, 2);
  // goal first, then the objects; all kept clear of each other
  const auto pts = place_points(rng, count + 1, 0.1, 0.9, kMinSeparation, {});
  s.task.goal = pts[0];
  const auto first_color = static_cast<Color>(rng.uniform_int(0, 2));
  for (int i = 0; i < count; ++i) {
    Object o;
    o.id = i;
    o.shape = static_cast<ShapeKind>(rng.uniform_int(0, 1));
    o.color = static_cast<Color>((static_cast<int>(first_color) + i) % 3);
    o.pos = pts[static_cast<std::size_t>(i) + 1];
    s.objects.push_back(o);
  }
  s.task.target = 0;
  return s;
}

bool is_success(const WorldState& s) {
  return s.holding != s.task.target && distance(s.target().pos, s.task.goal) <= kSuccessRadius;
}

StepResult step(WorldState& s, Action a, Vec2 push) {
  if (s.step_count >= kEpisodeCap) throw ContractError("step past the episode cap");
  for (double& v : a) v = std::clamp(v, -1.0, 1.0);
  s.gripper.x = std::clamp(s.gripper.x + kMoveScale * a[0] + push.x, 0.0, 1.0);
  s.gripper.y = std::clamp(s.gripper.y + kMoveScale * a[1] + push.y, 0.0, 1.0);
  if (a[2] > 0.0 && s.holding < 0) {
    double best = kGraspRadius;
    for (const Object& o : s.objects) {
      const double d = distance(o.pos, s.gripper);
      if (d <= best) {
        best = d;
        s.holding = o.id;
      }
    }
  } else if (a[2] < 0.0) {
    s.holding = -1;
  }
  if (s.holding >= 0) s.object(s.holding).pos = s.gripper;
  ++s.step_count;
  StepResult r;
  r.success = is_success(s);
  r.done = r.success || s.step_count >= kEpisodeCap;
  return r;
}

Action expert_action(const WorldState& s) {
  constexpr double kGain = 10.0;
  const bool carrying = s.holding == s.task.target;
  const Vec2 aim = carrying ? s.task.goal : s.target().pos;
  const double dx = aim.x - s.gripper.x, dy = aim.y - s.gripper.y;
  const bool close = std::hypot(dx, dy) < kExpertRadius;
  Action a{std::clamp(kGain * dx, -1.0, 1.0), std::clamp(kGain * dy, -1.0, 1.0), -1.0};
  if (carrying)
    a[2] = close ? -1.0 : 1.0;
  else
    a[2] = close ? 1.0 : -1.0;
  return a;
}

}  // namespace rvla::sim
