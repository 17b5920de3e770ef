#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rvla/robusttrain/bandit.hpp"
#include "rvla/uncertainty/spec.hpp"

namespace rvla::robust {

struct AdvConfig {
  double eps_action = 0.03;
  int pgd_steps_action = 3;
  double pgd_alpha_action = 0.01;
  double eps_obs = 8.0 / 255.0;
  int pgd_steps_obs = 3;
  double pgd_alpha_obs = 2.0 / 255.0;
  double lambda_in = 1.0;
  double lambda_out = 1.0;
};

enum class Mode { kBaseline, kRobust, kNoIn, kNoOut };

const char* mode_name(Mode m);
Mode mode_from_name(std::string_view name);
bool uses_input_term(Mode m);
bool uses_output_term(Mode m);

// 6 observation kinds, lighting, distractors, 3 instruction kinds.
std::vector<unc::Kind> default_arms();

struct TrainConfig {
  Mode mode = Mode::kRobust;
  int steps = 5000;
  int batch = 32;
  double lr = 3e-3;
  std::uint64_t seed = 0;
  std::vector<unc::Kind> arms = default_arms();
  BanditConfig bandit;
};

void validate(const AdvConfig& adv);
void validate(const TrainConfig& cfg);

// Flat `key = value` text. '#' starts a comment. Keys absent from the text
// keep the values already in cfg/adv.
void apply_config_text(std::string_view text, TrainConfig& cfg, AdvConfig& adv);
// Sets one key; returns false if the key is unknown.
bool set_config_value(std::string_view key, std::string_view value, TrainConfig& cfg, AdvConfig& adv);
std::string format_config(const TrainConfig& cfg, const AdvConfig& adv);

}  // namespace rvla::robust
