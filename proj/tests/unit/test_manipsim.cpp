#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "rvla/common/errors.hpp"
#include "rvla/manipsim/dataset.hpp"

using namespace rvla;
using namespace rvla::sim;

namespace {

bool rollout_expert(std::uint64_t seed) {
  WorldState s = reset(seed);
  for (;;) {
    const auto r = step(s, expert_action(s));
    if (r.done) return r.success;
  }
}

double min_pairwise(const WorldState& s) {
  std::vector<Vec2> pts = {s.task.goal};
  for (const auto& o : s.objects) pts.push_back(o.pos);
  double best = 1e9;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, distance(pts[i], pts[j]));
  return best;
}

}  // namespace

TEST_CASE("reset") {
  CHECK(reset(0) == reset(0));
  CHECK_FALSE(reset(0) == reset(1));
  const WorldState s = reset(7);
  CHECK(s.gripper == Vec2{0.5, 0.1});
  CHECK(s.holding == -1);
  CHECK(s.step_count == 0);
  CHECK(s.objects.size() >= 1);
  CHECK(s.objects.size() <= 2);

  int well_separated = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const WorldState w = reset(seed);
    if (min_pairwise(w) >= kMinSeparation) ++well_separated;
    for (const auto& o : w.objects) {
      CHECK(o.pos.x >= 0.0);
      CHECK(o.pos.x <= 1.0);
    }
  }
  CHECK(well_separated >= 9900);
}

TEST_CASE("step") {
  SUBCASE("null action leaves the gripper in place") {
    WorldState s = reset(3);
    const Vec2 before = s.gripper;
    step(s, {0, 0, 0});
    CHECK(s.gripper == before);
    CHECK(s.step_count == 1);
  }
  SUBCASE("displacement rule") {
    WorldState s = reset(3);
    s.gripper = {0.5, 0.5};
    step(s, {1, 0, 0});
    CHECK(s.gripper.x == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(s.gripper.y == 0.5);
  }
  SUBCASE("clipping to the unit square and action clamp") {
    WorldState s = reset(3);
    s.gripper = {0.99, 0.01};
    step(s, {5, -5, 0});
    CHECK(s.gripper == Vec2{1.0, 0.0});
  }
  SUBCASE("releasing the held target on the goal succeeds") {
    WorldState s = reset(4);
    s.gripper = s.task.goal;
    s.target_mut().pos = s.task.goal;
    s.holding = s.task.target;
    CHECK_FALSE(is_success(s));
    const auto r = step(s, {0, 0, -1});
    CHECK(r.success);
    CHECK(r.done);
  }
  SUBCASE("grasp picks the nearest object within reach and carries it") {
    WorldState s = reset(4);
    s.gripper = s.target().pos;
    step(s, {0, 0, 1});
    CHECK(s.holding == s.task.target);
    step(s, {1, 1, 1});
    CHECK(s.target().pos == s.gripper);
  }
  SUBCASE("episode cap") {
    WorldState s = reset(5);
    StepResult r;
    for (int t = 0; t < kEpisodeCap; ++t) r = step(s, {0, 0, 0});
    CHECK(r.done);
    CHECK_FALSE(r.success);
    CHECK_THROWS_AS(step(s, {0, 0, 0}), ContractError);
  }
  SUBCASE("transition determinism") {
    WorldState a = reset(8), b = reset(8);
    for (int t = 0; t < 20; ++t) {
      const Action act{std::sin(t * 1.3), std::cos(t * 0.7), t % 3 == 0 ? 1.0 : -0.5};
      step(a, act);
      step(b, act);
      CHECK(a == b);
    }
  }
}

TEST_CASE("render") {
  const WorldState s = reset(11);
  SUBCASE("default light scale is exactly one on flat pixels") {
    CHECK(brightness(LightingState{}, 0, 0, 1) == 1.0);
    const Image img = render(s);
    // corners are background in almost every layout; find a background pixel
    int gray = 0;
    for (int r = 0; r < kImageSide; ++r)
      for (int c = 0; c < kImageSide; ++c)
        if (img.at(r, c, 0) == kBackground && img.at(r, c, 1) == kBackground && img.at(r, c, 2) == kBackground) ++gray;
    CHECK(gray > 700);
  }
  SUBCASE("zero illumination gives a black image") {
    LightingState dark;
    dark.intensity = 0.0;
    dark.ambient = 0.0;
    const Image img = render(s, dark);
    CHECK(std::all_of(img.px.begin(), img.px.end(), [](std::uint8_t v) { return v == 0; }));
  }
  SUBCASE("determinism") { CHECK(render(s) == render(s)); }
  SUBCASE("azimuth is visible on objects but not on flat ground") {
    LightingState east, west;
    east.elevation = west.elevation = std::numbers::pi / 4;
    west.azimuth = std::numbers::pi;
    CHECK(brightness(east, 0, 0, 1) == doctest::Approx(brightness(west, 0, 0, 1)));
    CHECK_FALSE(render(s, east) == render(s, west));
  }
  SUBCASE("brightness is clipped to [0, 2]") {
    LightingState hot;
    hot.intensity = 50.0;
    CHECK(brightness(hot, 0, 0, 1) == 2.0);
  }
}

TEST_CASE("observe") {
  WorldState s = reset(12);
  CHECK(observe(s).proprio[2] == 0.0);
  s.holding = s.task.target;
  CHECK(observe(s).proprio[2] == 1.0);
  CHECK(observe(reset(12)) == observe(reset(12)));
}

TEST_CASE("instruction_for_task") {
  const Tokens red_square = tokenize(canonical_instruction(Color::kRed, ShapeKind::kSquare));
  CHECK(detokenize(red_square) == "pick up red square and place it on goal");
  CHECK(token_count(red_square) == 9);
  CHECK(red_square == tokenize(canonical_instruction(Color::kRed, ShapeKind::kSquare)));
  CHECK_FALSE(red_square == tokenize(canonical_instruction(Color::kBlue, ShapeKind::kSquare)));
  const Tokens odd = tokenize("pick up the purple square");
  CHECK(odd[2] == kUnk);
  CHECK(vocab_size() >= 36);
  CHECK(vocab_size() <= 44);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tokens t = instruction_for_task(reset(seed));
    const int n = token_count(t);
    for (int i = 0; i < kTokenSlots; ++i) {
      CHECK(t[static_cast<std::size_t>(i)] < vocab_size());
      if (i >= n) CHECK(t[static_cast<std::size_t>(i)] == kPad);
    }
  }
}

TEST_CASE("expert_action") {
  WorldState s = reset(2);
  s.gripper = {0.1, 0.5};
  s.target_mut().pos = {0.8, 0.5};
  const Action far = expert_action(s);
  CHECK(far[0] == 1.0);
  CHECK(far[1] == 0.0);
  CHECK(far[2] == -1.0);
  s.gripper = s.target().pos;
  CHECK(expert_action(s)[2] == 1.0);

  int succeeded = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) succeeded += rollout_expert(seed) ? 1 : 0;
  CHECK(succeeded == 500);
}

TEST_CASE("generate_dataset") {
  const Dataset one = generate_dataset(1, 0);
  CHECK(one.samples.size() >= 1);
  CHECK(one.samples.size() <= 12);
  CHECK_THROWS_AS(generate_dataset(0, 0), ContractError);

  const auto dir = std::filesystem::temp_directory_path();
  write_dataset(dir / "rvla_ds_a.bin", generate_dataset(5, 42));
  write_dataset(dir / "rvla_ds_b.bin", generate_dataset(5, 42));
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir / "rvla_ds_a.bin") == slurp(dir / "rvla_ds_b.bin"));

  const Dataset big = generate_dataset(500, 0);
  CHECK(big.samples.size() >= 1000);
  CHECK(big.samples.size() <= 6000);
  for (const auto& smp : big.samples)
    for (double a : smp.actions) {
      CHECK(a >= -1.0);
      CHECK(a <= 1.0);
    }

  SUBCASE("file round trip") {
    write_dataset(dir / "rvla_ds_c.bin", big);
    const Dataset back = read_dataset(dir / "rvla_ds_c.bin");
    REQUIRE(back.samples.size() == big.samples.size());
    for (std::size_t i = 0; i < big.samples.size(); ++i) {
      CHECK(back.samples[i].obs == big.samples[i].obs);
      CHECK(back.samples[i].actions == big.samples[i].actions);
    }
    std::string bytes = encode_dataset(one);
    CHECK(bytes.size() == 16 + one.samples.size() * (3072 + 24 + 24 + 120));
    CHECK_THROWS_AS(decode_dataset(bytes.substr(0, bytes.size() - 1)), FormatError);
    bytes[0] = 'X';
    CHECK_THROWS_AS(decode_dataset(bytes), FormatError);
    CHECK_THROWS_AS(read_dataset(dir / "does_not_exist" / "x.bin"), IoError);
  }

  SUBCASE("open-loop replay of a chunk reproduces the expert's states") {
    for (std::size_t i = 0; i < big.states.size(); i += 37) {
      WorldState replay = big.states[i];
      WorldState expert = big.states[i];
      for (int h = 0; h < kHorizon; ++h) {
        Action a{};
        for (int d = 0; d < kActionDim; ++d) a[static_cast<std::size_t>(d)] = big.samples[i].actions[static_cast<std::size_t>(h * kActionDim + d)];
        const bool done_e = step(expert, expert_action(expert)).done;
        step(replay, a);
        CHECK(replay == expert);
        if (done_e) break;
      }
    }
  }
}
