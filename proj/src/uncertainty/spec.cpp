#include "rvla/uncertainty/spec.hpp"

#include <array>
#include <charconv>
#include <sstream>

#include "rvla/common/errors.hpp"

namespace rvla::unc {

namespace {

struct KindInfo {
  const char* name;
  Modality modality;
  const char* primary;
  double maximum;
  std::vector<std::pair<const char*, double>> defaults;
};

const std::array<KindInfo, kKindCount>& table() {
  static const std::array<KindInfo, kKindCount> t = {{
      {"uniform_noise", Modality::kAction, "sigma", 1.0, {{"sigma", 0.04}}},
      {"gaussian_noise", Modality::kAction, "sigma", 1.0, {{"sigma", 0.3}}},
      {"action_bias", Modality::kAction, "sigma", 1.0, {{"sigma", 0.03}}},
      {"random_flips", Modality::kAction, "p", 1.0, {{"p", 0.05}}},
      {"sudden_spikes", Modality::kAction, "p", 1.0, {{"p", 0.05}, {"sigma", 1.0}}},
      {"image_gaussian_noise", Modality::kObservation, "sigma", 255.0, {{"sigma", 70.0}}},
      {"dead_pixel", Modality::kObservation, "p", 1.0, {{"p", 0.1}}},
      {"motion_blur", Modality::kObservation, "sigma", 5.0, {{"sigma", 1.0}, {"K", 5.0}}},
      {"color_jitter", Modality::kObservation, "max_factor", 1.0, {{"max_factor", 0.4}}},
      {"image_rotation", Modality::kObservation, "max_deg", 180.0, {{"max_deg", 20.0}}},
      {"image_shift", Modality::kObservation, "shift", 0.5, {{"shift", 0.15}}},
      {"external_force",
       Modality::kEnvironment,
       "magnitude",
       0.1,
       {{"magnitude", 0.02}, {"gap_min", 40}, {"gap_max", 50}, {"dur_min", 3}, {"dur_max", 7}}},
      {"distractors", Modality::kEnvironment, "count", 3.0, {{"count", 3.0}}},
      {"lighting",
       Modality::kEnvironment,
       "mix",
       1.0,
       {{"mix", 1.0}, {"shape", 1.0}, {"scale", 1.0}, {"period", 3.0}, {"elevation_deg", 45.0}}},
      {"lexical", Modality::kInstruction, "p", 1.0, {{"p", 0.5}}},
      {"syntactic", Modality::kInstruction, "p", 1.0, {{"p", 1.0}}},
      {"adversarial", Modality::kInstruction, "count", 3.0, {{"count", 3.0}}},
  }};
  return t;
}

const KindInfo& info(Kind k) { return table()[static_cast<std::size_t>(k)]; }

double parse_double(std::string_view text, std::string_view context) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw FormatError("bad number '" + std::string(text) + "' in " + std::string(context));
  return v;
}

}  // namespace

const char* kind_name(Kind k) { return info(k).name; }

Kind kind_from_name(std::string_view name) {
  for (int i = 0; i < kKindCount; ++i)
    if (name == table()[static_cast<std::size_t>(i)].name) return static_cast<Kind>(i);
  throw LookupError("unknown perturbation kind '" + std::string(name) + "'");
}

const char* modality_name(Modality m) {
  switch (m) {
    case Modality::kAction: return "action";
    case Modality::kObservation: return "observation";
    case Modality::kEnvironment: return "environment";
    case Modality::kInstruction: return "instruction";
  }
  return "action";
}

Modality modality_from_name(std::string_view name) {
  for (Modality m : {Modality::kAction, Modality::kObservation, Modality::kEnvironment, Modality::kInstruction})
    if (name == modality_name(m)) return m;
  throw ContractError("unknown modality '" + std::string(name) + "'");
}

Modality modality_of(Kind k) { return info(k).modality; }

bool is_input_kind(Kind k) {
  const Modality m = modality_of(k);
  return m == Modality::kObservation || m == Modality::kInstruction ||
         k == Kind::kDistractors || k == Kind::kLighting;
}

bool is_image_kind(Kind k) { return is_input_kind(k) && modality_of(k) != Modality::kInstruction; }

const char* primary_param(Kind k) { return info(k).primary; }
double level_maximum(Kind k) { return info(k).maximum; }

std::map<std::string, double> PerturbationSpec::resolved() const {
  auto out = params;
  if (level) out[primary_param(kind)] = *level * level_maximum(kind);
  return out;
}

double PerturbationSpec::param(const std::string& key) const {
  const auto r = resolved();
  const auto it = r.find(key);
  if (it == r.end()) throw LookupError(std::string(kind_name(kind)) + " has no parameter " + key);
  return it->second;
}

PerturbationSpec default_spec(Kind k) {
  PerturbationSpec s;
  s.kind = k;
  for (const auto& [key, value] : info(k).defaults) s.params[key] = value;
  return s;
}

PerturbationSpec at_level(Kind k, double level) {
  if (!(level >= 0.0 && level <= 1.0)) throw ContractError("level must lie in [0, 1]");
  PerturbationSpec s = default_spec(k);
  s.level = level;
  return s;
}

std::vector<PerturbationSpec> suite_default() {
  std::vector<PerturbationSpec> out;
  for (int i = 0; i < kKindCount; ++i) out.push_back(default_spec(static_cast<Kind>(i)));
  return out;
}

std::vector<PerturbationSpec> suite_for_modality(Modality m) {
  std::vector<PerturbationSpec> out;
  for (auto& s : suite_default())
    if (s.modality() == m) out.push_back(s);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string format_spec(const PerturbationSpec& s) {
  std::string line = kind_name(s.kind);
  for (const auto& [key, value] : s.params) line += " " + key + "=" + format_double(value);
  if (s.level) line += " level=" + format_double(*s.level);
  return line;
}

PerturbationSpec parse_spec(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string word;
  if (!(in >> word)) throw FormatError("empty perturbation line");
  PerturbationSpec s = default_spec(kind_from_name(word));
  while (in >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos || eq == 0) throw FormatError("expected key=value, got '" + word + "'");
    const std::string key = word.substr(0, eq);
    const double value = parse_double(std::string_view(word).substr(eq + 1), line);
    if (key == "level") {
      if (!(value >= 0.0 && value <= 1.0)) throw FormatError("level outside [0, 1] in '" + std::string(line) + "'");
      s.level = value;
    } else if (s.params.count(key)) {
      s.params[key] = value;
    } else {
      throw FormatError("unknown key '" + key + "' for " + kind_name(s.kind));
    }
  }
  return s;
}

std::string format_suite(const std::vector<PerturbationSpec>& suite) {
  std::string out;
  for (const auto& s : suite) out += format_spec(s) + "\n";
  return out;
}

std::vector<PerturbationSpec> parse_suite(std::string_view text) {
  std::vector<PerturbationSpec> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(parse_spec(line));
  }
  return out;
}

}  // namespace rvla::unc
