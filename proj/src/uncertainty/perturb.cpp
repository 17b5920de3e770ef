#include "rvla/uncertainty/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rvla/common/errors.hpp"

namespace rvla::unc {

namespace {

using sim::Image;
using sim::kImageSide;

void require(const PerturbationSpec& spec, bool ok, const char* what) {
  if (!ok) throw ContractError(std::string(kind_name(spec.kind)) + " is not " + what);
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0)); }

using Planes = std::vector<double>;  // H*W*3 doubles, same layout as Image

Planes to_planes(const Image& img) { return Planes(img.px.begin(), img.px.end()); }

Image from_planes(const Planes& p) {
  Image img;
  for (std::size_t i = 0; i < p.size(); ++i) img.px[i] = to_byte(p[i]);
  return img;
}

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

// Edge-replicating correlation with a square stencil.
Planes filter(const Planes& in, const std::vector<double>& kernel, int size) {
  const int half = size / 2;
  Planes out(in.size(), 0.0);
  for (int i = 0; i < kImageSide; ++i)
    for (int j = 0; j < kImageSide; ++j)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int u = -half; u <= half; ++u)
          for (int v = -half; v <= half; ++v) {
            const int si = clampi(i - u, 0, kImageSide - 1), sj = clampi(j - v, 0, kImageSide - 1);
            acc += kernel[static_cast<std::size_t>((u + half) * size + v + half)] *
                   in[static_cast<std::size_t>((si * kImageSide + sj) * 3 + c)];
          }
        out[static_cast<std::size_t>((i * kImageSide + j) * 3 + c)] = acc;
      }
  return out;
}

void clip(Planes& p) {
  for (double& v : p) v = std::clamp(v, 0.0, 255.0);
}

Image color_jitter(const Image& img, double max_factor, Stream& rng) {
  const double b = rng.uniform(1.0 - max_factor, 1.0 + max_factor);
  const double s = rng.uniform(1.0 - max_factor, 1.0 + max_factor);
  const double a = rng.uniform(1.0 - max_factor, 1.0 + max_factor);
  Planes p = to_planes(img);
  for (double& v : p) v *= b;
  clip(p);
  for (std::size_t px = 0; px < p.size(); px += 3) {
    const double gray = 0.299 * p[px] + 0.587 * p[px + 1] + 0.114 * p[px + 2];
    for (int c = 0; c < 3; ++c) p[px + c] = gray + s * (p[px + c] - gray);
  }
  clip(p);
  const Planes blurred = filter(p, std::vector<double>(9, 1.0 / 9.0), 3);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = blurred[i] + a * (p[i] - blurred[i]);
  return from_planes(p);
}

// out[i][j] = in[src(i, j)], background gray where src leaves the frame.
template <class Src>
Image remap(const Image& img, Src src) {
  Image out;
  for (int i = 0; i < kImageSide; ++i)
    for (int j = 0; j < kImageSide; ++j) {
      const auto [si, sj] = src(i, j);
      const bool inside = si >= 0 && sj >= 0 && si < kImageSide && sj < kImageSide;
      for (int c = 0; c < 3; ++c) out.at(i, j, c) = inside ? img.at(si, sj, c) : sim::kBackground;
    }
  return out;
}

int word(const char* w) { return sim::token_id(w); }

}  // namespace

sim::ActionChunk perturb_action(const sim::ActionChunk& chunk, const PerturbationSpec& spec, Stream& rng) {
  require(spec, spec.modality() == Modality::kAction, "an action perturbation");
  const auto p = spec.resolved();
  sim::ActionChunk out = chunk;
  for (double& a : out) {
    switch (spec.kind) {
      case Kind::kUniformNoise: {
        const double s = p.at("sigma");
        a += rng.uniform(-s, s);
        break;
      }
      case Kind::kGaussianNoise:
        a += p.at("sigma") * rng.normal();
        break;
      case Kind::kActionBias:
        a += p.at("sigma");
        break;
      case Kind::kRandomFlips: {
        const double xi = rng.uniform(), zeta = rng.uniform();
        if (xi < p.at("p")) a = zeta < 0.5 ? 1.0 : -1.0;
        break;
      }
      case Kind::kSuddenSpikes: {
        const double xi = rng.uniform();
        if (std::abs(xi) < p.at("p")) a += p.at("sigma") * (xi > 0.0 ? 1.0 : (xi < 0.0 ? -1.0 : 0.0));
        break;
      }
      default:
        break;
    }
    a = std::clamp(a, -1.0, 1.0);
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma, int size) {
  if (size < 1 || size % 2 == 0) throw ContractError("blur kernel size must be odd and positive");
  const int half = size / 2;
  std::vector<double> k(static_cast<std::size_t>(size * size), 0.0);
  if (sigma <= 0.0) {
    k[static_cast<std::size_t>(half * size + half)] = 1.0;
    return k;
  }
  double total = 0.0;
  for (int u = -half; u <= half; ++u)
    for (int v = -half; v <= half; ++v) {
      const double g = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma)) / (2.0 * std::numbers::pi * sigma * sigma);
      k[static_cast<std::size_t>((u + half) * size + v + half)] = g;
      total += g;
    }
  for (double& g : k) g /= total;
  return k;
}

sim::Image perturb_image(const sim::Image& img, const PerturbationSpec& spec, Stream& rng) {
  require(spec, spec.modality() == Modality::kObservation, "an observation perturbation");
  const auto p = spec.resolved();
  switch (spec.kind) {
    case Kind::kImageGaussianNoise: {
      const double s = p.at("sigma");
      Planes q = to_planes(img);
      for (double& v : q) v += s * rng.normal();
      return from_planes(q);
    }
    case Kind::kDeadPixel: {
      Image out = img;
      const double prob = p.at("p");
      for (int i = 0; i < kImageSide; ++i)
        for (int j = 0; j < kImageSide; ++j) {
          const double xi = rng.uniform(), zeta = rng.uniform();
          if (xi >= prob) continue;
          for (int c = 0; c < 3; ++c) out.at(i, j, c) = zeta < 0.5 ? 255 : 0;
        }
      return out;
    }
    case Kind::kMotionBlur: {
      const int size = static_cast<int>(std::lround(p.at("K")));
      return from_planes(filter(to_planes(img), gaussian_kernel(p.at("sigma"), size), size));
    }
    case Kind::kColorJitter:
      return color_jitter(img, p.at("max_factor"), rng);
    case Kind::kImageRotation: {
      const double limit = p.at("max_deg") * std::numbers::pi / 180.0;
      const double theta = rng.uniform(-limit, limit);
      const double c = std::cos(theta), s = std::sin(theta);
      const double mid = (kImageSide - 1) / 2.0;
      // inverse rotation of the output coordinate
      return remap(img, [&](int i, int j) {
        const double di = i - mid, dj = j - mid;
        const double si = c * di + s * dj + mid, sj = -s * di + c * dj + mid;
        return std::pair{static_cast<int>(std::lround(si)), static_cast<int>(std::lround(sj))};
      });
    }
    case Kind::kImageShift: {
      const double limit = p.at("shift") * kImageSide;
      const int di = static_cast<int>(std::lround(rng.uniform(-limit, limit)));
      const int dj = static_cast<int>(std::lround(rng.uniform(-limit, limit)));
      return remap(img, [&](int i, int j) { return std::pair{i - di, j - dj}; });
    }
    default:
      return img;
  }
}

const SynonymTable& default_synonyms() {
  static const SynonymTable t = {
      {word("pick"), {word("grab"), word("lift")}},
      {word("place"), {word("put"), word("set")}},
      {word("goal"), {word("target"), word("pad")}},
  };
  return t;
}

sim::Tokens lexical_transform(const sim::Tokens& tokens, const SynonymTable& table, double p, Stream& rng) {
  sim::Tokens out = tokens;
  for (int& id : out) {
    const auto it = table.find(id);
    if (it == table.end() || it->second.empty()) continue;
    const double xi = rng.uniform();
    const int pick = rng.uniform_int(0, static_cast<int>(it->second.size()) - 1);
    if (xi < p) id = it->second[static_cast<std::size_t>(pick)];
  }
  return out;
}

std::vector<std::string> syntactic_templates() {
  return {"on the goal, place the {c} {s}",
          "please pick up the {c} {s} and place it on the goal",
          "could you pick up the {c} {s} and then place it on the goal",
          "pick up the {c} {s}, then place it on the goal with care"};
}

sim::Tokens syntactic_transform(const sim::Tokens& tokens, double p, Stream& rng) {
  const double xi = rng.uniform();
  const auto templates = syntactic_templates();
  const int which = rng.uniform_int(0, static_cast<int>(templates.size()) - 1);
  if (xi >= p) return tokens;
  std::string color, shape;
  for (int id : tokens) {
    if (id == sim::kPad) break;
    const std::string& w = sim::token_word(id);
    if (color.empty() && (w == "red" || w == "green" || w == "blue")) color = w;
    if (shape.empty() && (w == "square" || w == "circle")) shape = w;
  }
  if (color.empty() || shape.empty()) return tokens;
  std::string sentence = templates[static_cast<std::size_t>(which)];
  sentence.replace(sentence.find("{c}"), 3, color);
  sentence.replace(sentence.find("{s}"), 3, shape);
  return sim::tokenize(sentence);
}

sim::Tokens adversarial_transform(const sim::Tokens& tokens, int max_insert, Stream& rng) {
  const int len = sim::token_count(tokens);
  const int room = sim::kTokenSlots - len;
  const int want = max_insert >= 1 ? rng.uniform_int(1, max_insert) : 0;
  const int n = std::min(want, room);
  std::vector<int> seq(tokens.begin(), tokens.begin() + len);
  const auto& fillers = sim::distractor_ids();
  for (int k = 0; k < n; ++k) {
    const int pos = rng.uniform_int(0, static_cast<int>(seq.size()));
    // a quarter of insertions are typos, which tokenize to UNK
    const bool typo = rng.uniform() < 0.25;
    const int filler = fillers[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(fillers.size()) - 1))];
    seq.insert(seq.begin() + pos, typo ? sim::kUnk : filler);
  }
  sim::Tokens out{};
  std::copy(seq.begin(), seq.end(), out.begin());
  return out;
}

sim::Tokens perturb_instruction(const sim::Tokens& tokens, const PerturbationSpec& spec, Stream& rng) {
  require(spec, spec.modality() == Modality::kInstruction, "an instruction perturbation");
  const auto p = spec.resolved();
  switch (spec.kind) {
    case Kind::kLexical:
      return lexical_transform(tokens, default_synonyms(), p.at("p"), rng);
    case Kind::kSyntactic:
      return syntactic_transform(tokens, p.at("p"), rng);
    case Kind::kAdversarial:
      return adversarial_transform(tokens, static_cast<int>(std::lround(p.at("count"))), rng);
    default:
      return tokens;
  }
}

ForceSchedule make_force_schedule(const PerturbationSpec& spec, Stream& rng) {
  if (spec.kind != Kind::kExternalForce) throw ContractError("force schedule needs an external_force spec");
  const auto p = spec.resolved();
  ForceSchedule s;
  s.magnitude = p.at("magnitude");
  s.gap_min = static_cast<int>(p.at("gap_min"));
  s.gap_max = static_cast<int>(p.at("gap_max"));
  s.dur_min = static_cast<int>(p.at("dur_min"));
  s.dur_max = static_cast<int>(p.at("dur_max"));
  if (s.gap_min < 1 || s.gap_max < s.gap_min || s.dur_min < 1 || s.dur_max < s.dur_min)
    throw ContractError("external_force: malformed gap or duration range");
  s.next_onset = rng.uniform_int(0, rng.uniform_int(s.gap_min, s.gap_max) - 1);
  return s;
}

std::pair<sim::Vec2, ForceSchedule> external_force_step(ForceSchedule sched, int t, Stream& rng) {
  if (sched.remaining == 0 && t >= sched.next_onset) {
    sched.remaining = rng.uniform_int(sched.dur_min, sched.dur_max);
    sched.next_onset = t + rng.uniform_int(sched.gap_min, sched.gap_max);
  }
  if (sched.remaining == 0) return {sim::Vec2{}, sched};
  --sched.remaining;
  return {sim::Vec2{sched.magnitude * sched.direction[0], sched.magnitude * sched.direction[1]}, sched};
}

LightingParams lighting_params(const PerturbationSpec& spec) {
  const auto p = spec.resolved();
  LightingParams lp;
  lp.shape = p.at("shape");
  lp.scale = p.at("scale");
  lp.period = std::max(1, static_cast<int>(std::lround(p.at("period"))));
  lp.elevation = p.at("elevation_deg") * std::numbers::pi / 180.0;
  return lp;
}

sim::LightingState sample_lighting(const sim::LightingState& prev, int t, Stream& rng, const LightingParams& p) {
  if (t % p.period != 0) return prev;
  sim::LightingState next = prev;
  next.intensity = rng.gamma(p.shape, p.scale);
  next.azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
  next.elevation = p.elevation;
  return next;
}

sim::LightingState blend_lighting(const sim::LightingState& sampled, double mix) {
  const sim::LightingState base;
  sim::LightingState out = sampled;
  out.intensity = base.intensity + mix * (sampled.intensity - base.intensity);
  out.elevation = base.elevation + mix * (sampled.elevation - base.elevation);
  return out;
}

sim::WorldState spawn_distractors(const sim::WorldState& s, Stream& rng, int count) {
  sim::WorldState out = s;
  const sim::Object& target = s.target();
  std::vector<std::pair<sim::Color, sim::ShapeKind>> looks;
  for (int c = 0; c < 3; ++c)
    for (int sh = 0; sh < 2; ++sh) {
      const auto look = std::pair{static_cast<sim::Color>(c), static_cast<sim::ShapeKind>(sh)};
      if (look != std::pair{target.color, target.shape}) looks.push_back(look);
    }
  std::vector<sim::Vec2> taken = {s.task.goal, s.gripper};
  for (const auto& o : s.objects) taken.push_back(o.pos);
  int next_id = 0;
  for (const auto& o : s.objects) next_id = std::max(next_id, o.id + 1);
  for (int k = 0; k < count; ++k) {
    const sim::Vec2 anchor = rng.uniform() < 0.5 ? target.pos : s.task.goal;
    double need = 0.1;
    sim::Vec2 p;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 0 && attempt % 100 == 0) need *= 0.8;
      const double r = rng.uniform(0.0, 0.2), phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      p = {std::clamp(anchor.x + r * std::cos(phi), 0.05, 0.95), std::clamp(anchor.y + r * std::sin(phi), 0.05, 0.95)};
      bool clear = true;
      for (const auto& q : taken) clear = clear && sim::distance(p, q) >= need;
      if (clear) break;
    }
    taken.push_back(p);
    const auto look = looks[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(looks.size()) - 1))];
    out.objects.push_back(sim::Object{next_id++, look.second, look.first, p});
  }
  return out;
}

void relight_image(sim::Image& img, const sim::LightingState& light) {
  const double k = sim::brightness(light, 0.0, 0.0, 1.0);
  for (auto& v : img.px) v = to_byte(v * k);
}

void paint_distractors(sim::Image& img, const sim::Tokens& tokens, Stream& rng, int count) {
  int color = -1, shape = -1;
  for (int id : tokens) {
    if (id == sim::kPad) break;
    const std::string& w = sim::token_word(id);
    if (color < 0 && w == "red") color = 0;
    if (color < 0 && w == "green") color = 1;
    if (color < 0 && w == "blue") color = 2;
    if (shape < 0 && w == "square") shape = 0;
    if (shape < 0 && w == "circle") shape = 1;
  }
  std::vector<sim::Object> extra;
  for (int k = 0; k < count; ++k) {
    int c = 0, sh = 0;
    do {
      c = rng.uniform_int(0, 2);
      sh = rng.uniform_int(0, 1);
    } while (c == color && sh == shape);
    sim::Vec2 p;
    // prefer spots that are background in the current image
    for (int attempt = 0; attempt < 100; ++attempt) {
      p = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
      const int col = std::clamp(static_cast<int>(p.x * kImageSide), 0, kImageSide - 1);
      const int row = std::clamp(static_cast<int>((1.0 - p.y) * kImageSide), 0, kImageSide - 1);
      if (img.at(row, col, 0) == img.at(row, col, 1) && img.at(row, col, 1) == img.at(row, col, 2)) break;
    }
    extra.push_back(sim::Object{100 + k, static_cast<sim::ShapeKind>(sh), static_cast<sim::Color>(c), p});
  }
  sim::draw_objects(img, extra);
}

}  // namespace rvla::unc
