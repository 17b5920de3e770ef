#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rvla::unc {

enum class Modality { kAction, kObservation, kEnvironment, kInstruction };

// Listed in report order: actions, observations, environment, instructions.
enum class Kind {
  kUniformNoise,
  kGaussianNoise,
  kActionBias,
  kRandomFlips,
  kSuddenSpikes,
  kImageGaussianNoise,
  kDeadPixel,
  kMotionBlur,
  kColorJitter,
  kImageRotation,
  kImageShift,
  kExternalForce,
  kDistractors,
  kLighting,
  kLexical,
  kSyntactic,
  kAdversarial,
};

inline constexpr int kKindCount = 17;

const char* kind_name(Kind k);
Kind kind_from_name(std::string_view name);
const char* modality_name(Modality m);
Modality modality_from_name(std::string_view name);
Modality modality_of(Kind k);

// Input side: perturbs what the policy sees. External force and the action
// kinds act on the policy's output instead.
bool is_input_kind(Kind k);
// Input kinds that change the image (and so get an η attack in training).
bool is_image_kind(Kind k);

// Name of the parameter that level rescales, and its value at level 1.
const char* primary_param(Kind k);
double level_maximum(Kind k);

struct PerturbationSpec {
  Kind kind = Kind::kUniformNoise;
  std::map<std::string, double> params;
  std::optional<double> level;

  Modality modality() const { return modality_of(kind); }
  // Parameters with level applied to the primary parameter.
  std::map<std::string, double> resolved() const;
  double param(const std::string& key) const;
  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

PerturbationSpec default_spec(Kind k);
PerturbationSpec at_level(Kind k, double level);
std::vector<PerturbationSpec> suite_default();
std::vector<PerturbationSpec> suite_for_modality(Modality m);

// `kind key=value ...`; rejects unknown kinds and keys.
std::string format_spec(const PerturbationSpec& s);
PerturbationSpec parse_spec(std::string_view line);
std::string format_suite(const std::vector<PerturbationSpec>& suite);
// Blank lines and lines starting with '#' are skipped.
std::vector<PerturbationSpec> parse_suite(std::string_view text);

// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace rvla::unc
