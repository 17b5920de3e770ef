#pragma once

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "rvla/common/random.hpp"
#include "rvla/manipsim/language.hpp"
#include "rvla/manipsim/render.hpp"
#include "rvla/manipsim/world.hpp"
#include "rvla/uncertainty/spec.hpp"

namespace rvla::unc {

// Applies the action formula to every entry of the chunk, then clamps.
sim::ActionChunk perturb_action(const sim::ActionChunk& chunk, const PerturbationSpec& spec, Stream& rng);

sim::Image perturb_image(const sim::Image& img, const PerturbationSpec& spec, Stream& rng);

// Word id -> replacement ids.
using SynonymTable = std::map<int, std::vector<int>>;
const SynonymTable& default_synonyms();

sim::Tokens perturb_instruction(const sim::Tokens& tokens, const PerturbationSpec& spec, Stream& rng);
sim::Tokens lexical_transform(const sim::Tokens& tokens, const SynonymTable& table, double p, Stream& rng);
sim::Tokens syntactic_transform(const sim::Tokens& tokens, double p, Stream& rng);
sim::Tokens adversarial_transform(const sim::Tokens& tokens, int max_insert, Stream& rng);

// Sentence templates a syntactic rewrite may pick from.
std::vector<std::string> syntactic_templates();

// Normalised 2-D Gaussian stencil of side K.
std::vector<double> gaussian_kernel(double sigma, int size);

struct ForceSchedule {
  double magnitude = 0.02;
  std::array<double, 3> direction{1.0, 0.0, 0.0};
  int next_onset = 0;
  int remaining = 0;
  int gap_min = 40;
  int gap_max = 50;
  int dur_min = 3;
  int dur_max = 7;
};

// The first onset falls at a uniform phase inside the first gap.
ForceSchedule make_force_schedule(const PerturbationSpec& spec, Stream& rng);
std::pair<sim::Vec2, ForceSchedule> external_force_step(ForceSchedule sched, int t, Stream& rng);

struct LightingParams {
  double shape = 1.0;
  double scale = 1.0;
  int period = 3;
  double elevation = 0.7853981633974483;
};

LightingParams lighting_params(const PerturbationSpec& spec);
sim::LightingState sample_lighting(const sim::LightingState& prev, int t, Stream& rng, const LightingParams& p = {});
// mix 0 gives the default light, mix 1 the sampled one.
sim::LightingState blend_lighting(const sim::LightingState& sampled, double mix);

sim::WorldState spawn_distractors(const sim::WorldState& s, Stream& rng, int count = 3);

// Image-space stand-ins for the two environment input kinds, used when
// only a recorded observation is available.
void relight_image(sim::Image& img, const sim::LightingState& light);
void paint_distractors(sim::Image& img, const sim::Tokens& tokens, Stream& rng, int count);

}  // namespace rvla::unc
