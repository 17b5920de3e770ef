#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "rvla/common/errors.hpp"
#include "rvla/uncertainty/perturb.hpp"

using namespace rvla;
using namespace rvla::unc;
using sim::ActionChunk;
using sim::Image;

namespace {

constexpr int kN = 100000;

struct Moments {
  double n = 0, sum = 0, sq = 0;
  void add(double x) {
    n += 1;
    sum += x;
    sq += x * x;
  }
  double mean() const { return sum / n; }
  double var() const { return sq / n - mean() * mean(); }
  double se_mean() const { return std::sqrt(var() / n); }
};

// |observed - expected| within 3 standard errors of a proportion.
bool fraction_ok(double hits, double n, double p) {
  return std::abs(hits / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n);
}

Image flat_image(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Image img;
  for (int i = 0; i < sim::kImageSide * sim::kImageSide; ++i) {
    img.px[static_cast<std::size_t>(3 * i)] = r;
    img.px[static_cast<std::size_t>(3 * i + 1)] = g;
    img.px[static_cast<std::size_t>(3 * i + 2)] = b;
  }
  return img;
}

PerturbationSpec with(Kind k, const char* key, double v) {
  PerturbationSpec s = default_spec(k);
  s.params[key] = v;
  return s;
}

ActionChunk filled(double v) {
  ActionChunk c;
  c.fill(v);
  return c;
}

sim::Tokens canonical() { return sim::tokenize(sim::canonical_instruction(sim::Color::kRed, sim::ShapeKind::kSquare)); }

}  // namespace

TEST_CASE("suite_default") {
  const auto suite = suite_default();
  REQUIRE(suite.size() == 17);
  int counts[4] = {0, 0, 0, 0};
  for (const auto& s : suite) ++counts[static_cast<int>(s.modality())];
  CHECK(counts[0] == 5);
  CHECK(counts[1] == 6);
  CHECK(counts[2] == 3);
  CHECK(counts[3] == 3);
  CHECK(std::string(kind_name(suite.front().kind)) == "uniform_noise");
  CHECK(std::string(kind_name(suite.back().kind)) == "adversarial");

  CHECK(default_spec(Kind::kUniformNoise).param("sigma") == 0.04);
  CHECK(default_spec(Kind::kGaussianNoise).param("sigma") == 0.3);
  CHECK(default_spec(Kind::kActionBias).param("sigma") == 0.03);
  CHECK(default_spec(Kind::kRandomFlips).param("p") == 0.05);
  CHECK(default_spec(Kind::kSuddenSpikes).param("p") == 0.05);
  CHECK(default_spec(Kind::kSuddenSpikes).param("sigma") == 1.0);
  CHECK(default_spec(Kind::kImageGaussianNoise).param("sigma") == 70.0);
  CHECK(default_spec(Kind::kDeadPixel).param("p") == 0.1);
  CHECK(default_spec(Kind::kMotionBlur).param("sigma") == 1.0);
  CHECK(default_spec(Kind::kMotionBlur).param("K") == 5.0);
  CHECK(default_spec(Kind::kColorJitter).param("max_factor") == 0.4);
  CHECK(default_spec(Kind::kImageRotation).param("max_deg") == 20.0);
  CHECK(default_spec(Kind::kImageShift).param("shift") == 0.15);
  CHECK(default_spec(Kind::kDistractors).param("count") == 3.0);
  CHECK(default_spec(Kind::kLighting).param("elevation_deg") == 45.0);

  SUBCASE("text format round trip") {
    CHECK(parse_suite(format_suite(suite)) == suite);
    for (const auto& s : suite) CHECK(parse_spec(format_spec(s)) == s);
    PerturbationSpec odd = at_level(Kind::kMotionBlur, 0.1 + 0.2);
    odd.params["K"] = 7;
    CHECK(parse_spec(format_spec(odd)) == odd);
    CHECK_THROWS_AS(parse_spec("dead_pixel q=0.5"), FormatError);
    CHECK_THROWS_AS(parse_spec("dead_pixel p=abc"), FormatError);
    CHECK_THROWS_AS(parse_spec("nonsense p=1"), LookupError);
    CHECK(parse_spec("image_shift shift=0.25").param("shift") == 0.25);
  }
  SUBCASE("level scaling is linear on the primary parameter") {
    for (int k = 0; k < kKindCount; ++k) {
      const Kind kind = static_cast<Kind>(k);
      const std::string key = primary_param(kind);
      CHECK(at_level(kind, 0.0).param(key) == 0.0);
      const double a = at_level(kind, 0.25).param(key), b = at_level(kind, 0.5).param(key);
      CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-15));
      CHECK(at_level(kind, 1.0).param(key) == level_maximum(kind));
    }
    CHECK_THROWS_AS(at_level(Kind::kDeadPixel, 1.5), ContractError);
  }
  SUBCASE("arm classification") {
    CHECK(is_input_kind(Kind::kLighting));
    CHECK(is_input_kind(Kind::kDistractors));
    CHECK(is_input_kind(Kind::kLexical));
    CHECK_FALSE(is_input_kind(Kind::kExternalForce));
    CHECK_FALSE(is_input_kind(Kind::kRandomFlips));
    CHECK(is_image_kind(Kind::kDeadPixel));
    CHECK_FALSE(is_image_kind(Kind::kSyntactic));
  }
}

TEST_CASE("perturb_action") {
  Stream rng(1);
  CHECK_THROWS_AS(perturb_action(filled(0), default_spec(Kind::kDeadPixel), rng), ContractError);

  SUBCASE("uniform sigma 0 is the identity") {
    const ActionChunk c = filled(0.3);
    CHECK(perturb_action(c, with(Kind::kUniformNoise, "sigma", 0.0), rng) == c);
  }
  SUBCASE("bias adds sigma to every entry") {
    for (double v : perturb_action(filled(0), default_spec(Kind::kActionBias), rng)) CHECK(v == 0.03);
  }
  SUBCASE("uniform noise moments") {
    Moments m;
    const auto spec = default_spec(Kind::kUniformNoise);
    while (m.n < kN)
      for (double v : perturb_action(filled(0), spec, rng)) m.add(v);
    CHECK(std::abs(m.mean()) <= 3 * m.se_mean());
    // Var of U(-s,s) is s^2/3; se of the sample variance ~ sqrt((m4 - s^4/9)/n)
    const double s = 0.04, var = s * s / 3, m4 = std::pow(s, 4) / 5;
    CHECK(std::abs(m.var() - var) <= 3 * std::sqrt((m4 - var * var) / m.n));
    CHECK(m.sq / m.n <= s * s);
  }
  SUBCASE("gaussian noise against an independent clamped-normal oracle") {
    Moments m, oracle;
    std::mt19937 eng(99);
    std::normal_distribution<double> nd(0.0, 0.3);
    const auto spec = default_spec(Kind::kGaussianNoise);
    while (m.n < kN)
      for (double v : perturb_action(filled(0.2), spec, rng)) m.add(v);
    while (oracle.n < kN) oracle.add(std::clamp(0.2 + nd(eng), -1.0, 1.0));
    const double se = std::sqrt(m.var() / m.n + oracle.var() / oracle.n);
    CHECK(std::abs(m.mean() - oracle.mean()) <= 3 * se);
    CHECK(m.var() == doctest::Approx(oracle.var()).epsilon(0.02));
  }
  SUBCASE("flips: fraction and branch values over 10^6 entries") {
    double flipped = 0, plus = 0, n = 0;
    const auto spec = default_spec(Kind::kRandomFlips);
    while (n < 1e6)
      for (double v : perturb_action(filled(0.25), spec, rng)) {
        n += 1;
        if (v != 0.25) {
          CHECK((v == 1.0 || v == -1.0));
          flipped += 1;
          plus += v == 1.0;
        }
      }
    CHECK(std::abs(flipped / n - 0.05) <= 0.002);
    CHECK(std::abs(plus / flipped - 0.5) <= 0.01);
    CHECK(fraction_ok(flipped, n, 0.05));
  }
  SUBCASE("spikes: fraction and magnitude") {
    double spiked = 0, n = 0;
    const auto spec = default_spec(Kind::kSuddenSpikes);
    while (n < kN)
      for (double v : perturb_action(filled(-0.5), spec, rng)) {
        n += 1;
        if (v != -0.5) {
          CHECK(v == 0.5);  // xi ~ U(0,1) so sign(xi) = +1
          spiked += 1;
        }
      }
    CHECK(fraction_ok(spiked, n, 0.05));
  }
  SUBCASE("output stays within [-1, 1]") {
    for (int r = 0; r < 200; ++r)
      for (double v : perturb_action(filled(0.99), with(Kind::kGaussianNoise, "sigma", 1.0), rng)) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
      }
  }
}

TEST_CASE("perturb_image") {
  Stream rng(2);
  CHECK_THROWS_AS(perturb_image(Image{}, default_spec(Kind::kLexical), rng), ContractError);
  const Image scene = sim::render(sim::reset(3));

  SUBCASE("gaussian noise against an independent clip-and-round oracle") {
    Moments m, oracle;
    std::mt19937 eng(5);
    std::normal_distribution<double> nd(0.0, 70.0);
    const Image gray = flat_image(120, 120, 120);
    const auto spec = default_spec(Kind::kImageGaussianNoise);
    while (m.n < kN)
      for (auto v : perturb_image(gray, spec, rng).px) m.add(v);
    while (oracle.n < kN) oracle.add(std::clamp(std::round(120 + nd(eng)), 0.0, 255.0));
    const double se = std::sqrt(m.var() / m.n + oracle.var() / oracle.n);
    CHECK(std::abs(m.mean() - oracle.mean()) <= 3 * se);
    CHECK(m.var() == doctest::Approx(oracle.var()).epsilon(0.02));
  }
  SUBCASE("dead pixels: per-location fractions and exhaustion at p = 1") {
    double white = 0, black = 0, n = 0;
    const Image gray = flat_image(120, 120, 120);
    const auto spec = default_spec(Kind::kDeadPixel);
    while (n < kN) {
      const Image out = perturb_image(gray, spec, rng);
      for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
          n += 1;
          const auto v = out.at(i, j, 0);
          CHECK(out.at(i, j, 1) == v);
          white += v == 255;
          black += v == 0;
        }
    }
    CHECK(fraction_ok(white, n, 0.05));
    CHECK(fraction_ok(black, n, 0.05));
    const Image all = perturb_image(scene, with(Kind::kDeadPixel, "p", 1.0), rng);
    CHECK(std::all_of(all.px.begin(), all.px.end(), [](std::uint8_t v) { return v == 0 || v == 255; }));
  }
  SUBCASE("blur of a single bright pixel matches a direct convolution oracle") {
    Image dot = flat_image(0, 0, 0);
    for (int c = 0; c < 3; ++c) dot.at(16, 16, c) = 255;
    const Image out = perturb_image(dot, default_spec(Kind::kMotionBlur), rng);
    double stencil[5][5], total = 0;
    for (int u = -2; u <= 2; ++u)
      for (int v = -2; v <= 2; ++v) {
        stencil[u + 2][v + 2] = std::exp(-(u * u + v * v) / 2.0) / (2 * std::numbers::pi);
        total += stencil[u + 2][v + 2];
      }
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        double expect = 0;
        for (int u = -2; u <= 2; ++u)
          for (int v = -2; v <= 2; ++v) {
            const int si = i - u, sj = j - v;
            if (si == 16 && sj == 16) expect += 255.0 * stencil[u + 2][v + 2] / total;
          }
        CHECK(std::abs(out.at(i, j, 1) - expect) <= 1.0);
      }
    CHECK(perturb_image(scene, with(Kind::kMotionBlur, "sigma", 0.0), rng) == scene);
  }
  SUBCASE("color jitter on a gray field is pure brightness") {
    // saturation and sharpness are no-ops on a constant gray image
    Moments m;
    const Image gray = flat_image(100, 100, 100);
    const auto spec = default_spec(Kind::kColorJitter);
    for (int r = 0; r < kN; ++r) {
      const Image out = perturb_image(gray, spec, rng);
      m.add(out.px[0]);
      CHECK(out.px[777] == out.px[0]);
    }
    CHECK(std::abs(m.mean() - 100.0) <= 3 * m.se_mean());
    CHECK(m.var() == doctest::Approx(80.0 * 80.0 / 12.0).epsilon(0.02));
    CHECK(perturb_image(scene, with(Kind::kColorJitter, "max_factor", 0.0), rng) == scene);
  }
  SUBCASE("color jitter saturation factor on a colored field") {
    // No clipping occurs for (150, 80, 40): red = b * (g + s * (150 - g))
    // with b, s independent U(0.6, 1.4).
    Moments m;
    const Image colored = flat_image(150, 80, 40);
    for (int r = 0; r < kN; ++r) m.add(perturb_image(colored, default_spec(Kind::kColorJitter), rng).px[3 * 100]);
    const double g = 0.299 * 150 + 0.587 * 80 + 0.114 * 40, d = 150 - g, vu = 0.8 * 0.8 / 12;
    const double second = (1 + vu) * ((g + d) * (g + d) + d * d * vu);
    CHECK(std::abs(m.mean() - 150.0) <= 3 * m.se_mean());
    CHECK(m.var() == doctest::Approx(second - 150.0 * 150.0 + 1.0 / 12).epsilon(0.03));
  }
  SUBCASE("rotation and shift at zero magnitude are exact identities") {
    CHECK(perturb_image(scene, with(Kind::kImageRotation, "max_deg", 0.0), rng) == scene);
    CHECK(perturb_image(scene, with(Kind::kImageShift, "shift", 0.0), rng) == scene);
    CHECK(perturb_image(scene, at_level(Kind::kImageRotation, 0.0), rng) == scene);
  }
  SUBCASE("rotation angle distribution from a marker") {
    Moments m;
    double worst = 0;
    for (int r = 0; r < 4000; ++r) {
      Image img = flat_image(0, 0, 0);
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) img.at(16 + di, 28 + dj, 0) = 255;
      const Image out = perturb_image(img, default_spec(Kind::kImageRotation), rng);
      double si = 0, sj = 0, cnt = 0;
      for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j)
          if (out.at(i, j, 0) == 255) {
            si += i;
            sj += j;
            cnt += 1;
          }
      REQUIRE(cnt > 0);
      // output row grows downward; rotation by theta moves (di, dj) to R(di, dj)
      const double theta = std::atan2(si / cnt - 15.5, sj / cnt - 15.5) - std::atan2(16 - 15.5, 28 - 15.5);
      m.add(theta);
      worst = std::max(worst, std::abs(theta));
    }
    const double lim = 20.0 * std::numbers::pi / 180.0;
    CHECK(worst <= lim + 0.06);
    CHECK(std::abs(m.mean()) <= 3 * m.se_mean() + 0.01);
    CHECK(m.var() == doctest::Approx(lim * lim / 3.0).epsilon(0.08));
  }
  SUBCASE("shift offsets follow round(U(-4.8, 4.8))") {
    std::vector<double> hist(11, 0.0);
    Image img = flat_image(0, 0, 0);
    img.at(16, 16, 0) = 255;
    for (int r = 0; r < kN; ++r) {
      const Image out = perturb_image(img, default_spec(Kind::kImageShift), rng);
      int found_i = -1;
      for (int i = 0; i < 32 && found_i < 0; ++i)
        for (int j = 0; j < 32; ++j)
          if (out.at(i, j, 0) == 255) found_i = i;
      REQUIRE(found_i >= 0);
      hist[static_cast<std::size_t>(found_i - 16 + 5)] += 1;
    }
    const double width = 9.6;
    for (int k = -5; k <= 5; ++k) {
      const double p = (std::abs(k) <= 4 ? 1.0 : 0.3) / width;
      CHECK(fraction_ok(hist[static_cast<std::size_t>(k + 5)], kN, p));
    }
  }
  SUBCASE("shape and determinism for every observation kind") {
    for (const auto& spec : suite_for_modality(Modality::kObservation)) {
      Stream a(77), b(77);
      CHECK(perturb_image(scene, spec, a) == perturb_image(scene, spec, b));
      CHECK(perturb_image(scene, at_level(spec.kind, 0.0), a) == scene);
    }
  }
}

TEST_CASE("fill value of geometric transforms is background gray") {
  Stream rng(4);
  const Image white = flat_image(255, 255, 255);
  PerturbationSpec shift = with(Kind::kImageShift, "shift", 0.5);
  bool saw_fill = false;
  for (int r = 0; r < 20 && !saw_fill; ++r) {
    const Image out = perturb_image(white, shift, rng);
    for (auto v : out.px) {
      CHECK((v == 255 || v == sim::kBackground));
      saw_fill = saw_fill || v == sim::kBackground;
    }
  }
  CHECK(saw_fill);
}

TEST_CASE("perturb_instruction") {
  Stream rng(3);
  const sim::Tokens base = canonical();
  CHECK_THROWS_AS(perturb_instruction(base, default_spec(Kind::kDeadPixel), rng), ContractError);

  SUBCASE("empty synonym table is the identity") {
    CHECK(lexical_transform(base, {}, 1.0, rng) == base);
  }
  SUBCASE("lexical output is reachable under the synonym grammar") {
    std::set<std::string> reachable;
    for (const char* p : {"pick", "grab", "lift"})
      for (const char* q : {"place", "put", "set"})
        for (const char* g : {"goal", "target", "pad"})
          reachable.insert(std::string(p) + " up red square and " + q + " it on " + g);
    double swapped = 0;
    for (int r = 0; r < kN / 3; ++r) {
      const sim::Tokens out = perturb_instruction(base, default_spec(Kind::kLexical), rng);
      CHECK(reachable.count(sim::detokenize(out)) == 1);
      for (int i = 0; i < sim::kTokenSlots; ++i) swapped += out[static_cast<std::size_t>(i)] != base[static_cast<std::size_t>(i)];
    }
    CHECK(fraction_ok(swapped, 3.0 * (kN / 3), 0.5));
  }
  SUBCASE("syntactic rewrites keep the target and use every template") {
    std::map<std::string, double> seen;
    for (int r = 0; r < kN / 10; ++r) {
      const std::string s = sim::detokenize(perturb_instruction(base, default_spec(Kind::kSyntactic), rng));
      CHECK(s.find("red square") != std::string::npos);
      seen[s] += 1;
    }
    CHECK(seen.size() == syntactic_templates().size());
    for (const auto& [s, n] : seen) CHECK(fraction_ok(n, kN / 10, 1.0 / syntactic_templates().size()));
  }
  SUBCASE("adversarial inserts 1 to 3 filler or UNK tokens") {
    const std::set<int> allowed = [] {
      std::set<int> a(sim::distractor_ids().begin(), sim::distractor_ids().end());
      a.insert(sim::kUnk);
      return a;
    }();
    double grew[4] = {0, 0, 0, 0}, unk = 0, inserted = 0;
    for (int r = 0; r < kN; ++r) {
      const sim::Tokens out = perturb_instruction(base, default_spec(Kind::kAdversarial), rng);
      const int extra = sim::token_count(out) - sim::token_count(base);
      REQUIRE(extra >= 1);
      REQUIRE(extra <= 3);
      grew[extra] += 1;
      // remove inserted ids by matching the base subsequence
      std::size_t bi = 0;
      for (int i = 0; i < sim::token_count(out); ++i) {
        const int id = out[static_cast<std::size_t>(i)];
        if (bi < 9 && id == base[bi]) {
          ++bi;
          continue;
        }
        CHECK(allowed.count(id) == 1);
        inserted += 1;
        unk += id == sim::kUnk;
      }
      CHECK(bi == 9);
    }
    for (int k = 1; k <= 3; ++k) CHECK(fraction_ok(grew[k], kN, 1.0 / 3.0));
    CHECK(fraction_ok(unk, inserted, 0.25));
  }
  SUBCASE("target tokens survive every instruction kind") {
    for (const auto& spec : suite_for_modality(Modality::kInstruction))
      for (int r = 0; r < 200; ++r) {
        const std::string s = sim::detokenize(perturb_instruction(base, spec, rng));
        CHECK(s.find("red") != std::string::npos);
        CHECK(s.find("square") != std::string::npos);
      }
  }
  SUBCASE("level 0 and determinism") {
    for (const auto& spec : suite_for_modality(Modality::kInstruction)) {
      CHECK(perturb_instruction(base, at_level(spec.kind, 0.0), rng) == base);
      Stream a(8), b(8);
      CHECK(perturb_instruction(base, spec, a) == perturb_instruction(base, spec, b));
    }
  }
}

TEST_CASE("external_force_step") {
  Stream rng(5);
  const auto spec = default_spec(Kind::kExternalForce);
  ForceSchedule sched = make_force_schedule(spec, rng);
  CHECK(sched.direction == std::array<double, 3>{1.0, 0.0, 0.0});
  for (int t = 0; t < sched.next_onset; ++t) {
    auto [push, next] = external_force_step(sched, t, rng);
    CHECK(push == sim::Vec2{});
    sched = next;
  }

  std::vector<int> onsets, lengths;
  sched = make_force_schedule(spec, rng);
  bool active = false;
  int run = 0;
  std::vector<double> dur_hist(8, 0.0);
  for (int t = 0; t < 200000; ++t) {
    auto [push, next] = external_force_step(sched, t, rng);
    sched = next;
    const bool on = push.x != 0.0;
    if (on) {
      CHECK(push.x == 0.02);
      CHECK(push.y == 0.0);
    }
    if (on && !active) onsets.push_back(t);
    if (on) ++run;
    if (!on && active) {
      lengths.push_back(run);
      run = 0;
    }
    active = on;
  }
  REQUIRE(lengths.size() > 100);
  for (int len : lengths) {
    CHECK(len >= 3);
    CHECK(len <= 7);
    dur_hist[static_cast<std::size_t>(len)] += 1;
  }
  for (std::size_t i = 1; i < onsets.size(); ++i) {
    CHECK(onsets[i] - onsets[i - 1] >= 40);
    CHECK(onsets[i] - onsets[i - 1] <= 50);
  }
  for (int d = 3; d <= 7; ++d) CHECK(fraction_ok(dur_hist[static_cast<std::size_t>(d)], static_cast<double>(lengths.size()), 0.2));

  ForceSchedule zero = make_force_schedule(at_level(Kind::kExternalForce, 0.0), rng);
  for (int t = 0; t < 200; ++t) {
    auto [push, next] = external_force_step(zero, t, rng);
    CHECK(push == sim::Vec2{});
    zero = next;
  }
}

TEST_CASE("sample_lighting") {
  Stream rng(6);
  sim::LightingState prev;
  prev.intensity = 0.37;
  const auto same1 = sample_lighting(prev, 1, rng);
  const auto same2 = sample_lighting(prev, 2, rng);
  CHECK(same1.intensity == 0.37);
  CHECK(same2.intensity == 0.37);
  CHECK(same1.elevation == prev.elevation);
  Moments m;
  for (int i = 0; i < kN; ++i) {
    const auto l = sample_lighting(prev, 3 * i, rng);
    CHECK(l.elevation == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
    CHECK(l.intensity >= 0.0);
    CHECK(l.azimuth >= 0.0);
    CHECK(l.azimuth < 2 * std::numbers::pi);
    m.add(l.intensity);
  }
  CHECK(std::abs(m.mean() - 1.0) <= 0.02);
  CHECK(std::abs(m.mean() - 1.0) <= 3 * m.se_mean());
  CHECK(m.var() == doctest::Approx(1.0).epsilon(0.05));

  const auto lp = lighting_params(default_spec(Kind::kLighting));
  CHECK(lp.period == 3);
  const auto blended = blend_lighting(sample_lighting(prev, 0, rng, lp), 0.0);
  CHECK(sim::brightness(blended, 0, 0, 1) == 1.0);
}

TEST_CASE("spawn_distractors") {
  Stream rng(7);
  std::map<std::pair<int, int>, double> looks;
  double total = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const sim::WorldState s = sim::reset(seed);
    const sim::WorldState d = spawn_distractors(s, rng);
    REQUIRE(d.objects.size() == s.objects.size() + 3);
    CHECK(d.task == s.task);
    CHECK(d.target() == s.target());
    for (std::size_t i = s.objects.size(); i < d.objects.size(); ++i) {
      const auto& o = d.objects[i];
      CHECK_FALSE((o.color == s.target().color && o.shape == s.target().shape));
      const double near = std::min(sim::distance(o.pos, s.target().pos), sim::distance(o.pos, s.task.goal));
      CHECK(near <= 0.2 + 1e-12);
      looks[{static_cast<int>(o.color), static_cast<int>(o.shape)}] += 1;
      total += 1;
    }
  }
  CHECK(looks.size() == 6);
  Stream a(1), b(1);
  CHECK(spawn_distractors(sim::reset(4), a) == spawn_distractors(sim::reset(4), b));
  Stream c(1);
  CHECK(spawn_distractors(sim::reset(4), c, 0) == sim::reset(4));
}

TEST_CASE("image-space environment stand-ins") {
  Stream rng(9);
  const sim::WorldState s = sim::reset(21);
  Image img = sim::render(s);
  relight_image(img, sim::LightingState{});
  CHECK(img == sim::render(s));
  sim::LightingState dim;
  dim.intensity = 0.5;
  relight_image(img, dim);
  CHECK(img.px[0] == 72);  // 120 * (0.2 + 0.8 * 0.5)
  Image painted = sim::render(s);
  paint_distractors(painted, sim::instruction_for_task(s), rng, 3);
  CHECK_FALSE(painted == sim::render(s));
  Image none = sim::render(s);
  paint_distractors(none, sim::instruction_for_task(s), rng, 0);
  CHECK(none == sim::render(s));
}
