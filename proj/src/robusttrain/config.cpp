#include "rvla/robusttrain/config.hpp"

#include <charconv>
#include <cmath>

#include "rvla/common/errors.hpp"

namespace rvla::robust {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw FormatError("bad number for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw FormatError("bad integer for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

std::vector<unc::Kind> parse_arms(std::string_view v) {
  std::vector<unc::Kind> arms;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) arms.push_back(unc::kind_from_name(item));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return arms;
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kBaseline: return "baseline";
    case Mode::kRobust: return "robust";
    case Mode::kNoIn: return "no_in";
    case Mode::kNoOut: return "no_out";
  }
  return "?";
}

Mode mode_from_name(std::string_view name) {
  for (Mode m : {Mode::kBaseline, Mode::kRobust, Mode::kNoIn, Mode::kNoOut})
    if (name == mode_name(m)) return m;
  throw ContractError("unknown mode '" + std::string(name) + "'");
}

bool uses_input_term(Mode m) { return m == Mode::kRobust || m == Mode::kNoOut; }
bool uses_output_term(Mode m) { return m == Mode::kRobust || m == Mode::kNoIn; }

std::vector<unc::Kind> default_arms() {
  using unc::Kind;
  return {Kind::kImageGaussianNoise, Kind::kDeadPixel, Kind::kMotionBlur, Kind::kColorJitter,
          Kind::kImageRotation,      Kind::kImageShift, Kind::kLighting,  Kind::kDistractors,
          Kind::kLexical,            Kind::kSyntactic,  Kind::kAdversarial};
}

void validate(const AdvConfig& a) {
  for (double v : {a.eps_action, a.pgd_alpha_action, a.eps_obs, a.pgd_alpha_obs})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("attack radii and step sizes must be >= 0");
  if (a.pgd_steps_action < 0 || a.pgd_steps_obs < 0) throw ContractError("pgd steps must be >= 0");
}

void validate(const TrainConfig& c) {
  if (c.steps < 0) throw ContractError("steps must be >= 0");
  if (c.batch < 1) throw ContractError("batch must be >= 1");
  if (!(c.lr > 0.0)) throw ContractError("lr must be positive");
  if (uses_input_term(c.mode) && c.arms.empty()) throw ContractError("input term needs at least one arm");
  for (unc::Kind k : c.arms)
    if (!unc::is_input_kind(k))
      throw ContractError(std::string("arm ") + unc::kind_name(k) + " is not an input perturbation");
  if (c.bandit.window < 1) throw ContractError("ucb window must be >= 1");
  if (c.bandit.ema_decay < 0.0 || c.bandit.ema_decay >= 1.0) throw ContractError("ucb decay must be in [0, 1)");
}

bool set_config_value(std::string_view key, std::string_view value, TrainConfig& c, AdvConfig& a) {
  const std::string_view v = trim(value);
  if (key == "mode") c.mode = mode_from_name(v);
  else if (key == "steps") c.steps = to_int<int>(key, v);
  else if (key == "batch") c.batch = to_int<int>(key, v);
  else if (key == "lr") c.lr = to_double(key, v);
  else if (key == "seed") c.seed = to_int<std::uint64_t>(key, v);
  else if (key == "arms") c.arms = parse_arms(v);
  else if (key == "ucb_alpha") c.bandit.alpha = to_double(key, v);
  else if (key == "ucb_window") c.bandit.window = to_int<std::size_t>(key, v);
  else if (key == "ucb_min_samples") c.bandit.min_samples = to_int<int>(key, v);
  else if (key == "ucb_ema_decay") c.bandit.ema_decay = to_double(key, v);
  else if (key == "eps_action") a.eps_action = to_double(key, v);
  else if (key == "pgd_steps_action") a.pgd_steps_action = to_int<int>(key, v);
  else if (key == "pgd_alpha_action") a.pgd_alpha_action = to_double(key, v);
  else if (key == "eps_obs") a.eps_obs = to_double(key, v);
  else if (key == "pgd_steps_obs") a.pgd_steps_obs = to_int<int>(key, v);
  else if (key == "pgd_alpha_obs") a.pgd_alpha_obs = to_double(key, v);
  else if (key == "lambda_in") a.lambda_in = to_double(key, v);
  else if (key == "lambda_out") a.lambda_out = to_double(key, v);
  else return false;
  return true;
}

void apply_config_text(std::string_view text, TrainConfig& c, AdvConfig& a) {
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (!set_config_value(key, line.substr(eq + 1), c, a))
      throw FormatError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
  }
}

std::string format_config(const TrainConfig& c, const AdvConfig& a) {
  using unc::format_double;
  std::string arms;
  for (unc::Kind k : c.arms) {
    if (!arms.empty()) arms += ",";
    arms += unc::kind_name(k);
  }
  std::string out;
  auto put = [&](const char* k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
  put("mode", mode_name(c.mode));
  put("steps", std::to_string(c.steps));
  put("batch", std::to_string(c.batch));
  put("lr", format_double(c.lr));
  put("seed", std::to_string(c.seed));
  put("arms", arms);
  put("ucb_alpha", format_double(c.bandit.alpha));
  put("ucb_window", std::to_string(c.bandit.window));
  put("ucb_min_samples", std::to_string(c.bandit.min_samples));
  put("ucb_ema_decay", format_double(c.bandit.ema_decay));
  put("eps_action", format_double(a.eps_action));
  put("pgd_steps_action", std::to_string(a.pgd_steps_action));
  put("pgd_alpha_action", format_double(a.pgd_alpha_action));
  put("eps_obs", format_double(a.eps_obs));
  put("pgd_steps_obs", std::to_string(a.pgd_steps_obs));
  put("pgd_alpha_obs", format_double(a.pgd_alpha_obs));
  put("lambda_in", format_double(a.lambda_in));
  put("lambda_out", format_double(a.lambda_out));
  return out;
}

}  // namespace rvla::robust
