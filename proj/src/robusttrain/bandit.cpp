#include "rvla/robusttrain/bandit.hpp"

#include <cmath>
#include <numeric>

#include "rvla/common/errors.hpp"

namespace rvla::robust {

double ArmStats::window_mean() const {
  if (window.empty()) return 0.0;
  return std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
}

double BanditState::ema_std() const { return std::sqrt(std::max(0.0, ema_var)); }

double ucb_score(double mean, std::int64_t total, std::int64_t pulls, double alpha) {
  return mean + alpha * std::sqrt(std::log(static_cast<double>(total)) / static_cast<double>(pulls));
}

std::size_t ucb_select(const BanditState& state, const BanditConfig& cfg) {
  if (state.arms.empty()) throw ContractError("ucb_select needs at least one arm");
  std::size_t pick = 0;
  bool forced = false;
  for (std::size_t i = 0; i < state.arms.size(); ++i) {
    const auto pulls = state.arms[i].pulls;
    if (pulls >= cfg.min_samples) continue;
    if (!forced || pulls < state.arms[pick].pulls) pick = i;
    forced = true;
  }
  if (forced) return pick;
  double best = -INFINITY;
  for (std::size_t i = 0; i < state.arms.size(); ++i) {
    const double s = ucb_score(state.arms[i].window_mean(), state.total, state.arms[i].pulls, cfg.alpha);
    if (s > best) {
      best = s;
      pick = i;
    }
  }
  return pick;
}

double bandit_update(BanditState& state, std::size_t arm, double raw_reward, const BanditConfig& cfg) {
  if (arm >= state.arms.size()) throw ContractError("bandit arm index out of range");
  if (!std::isfinite(raw_reward)) {
    ++state.skipped;
    return 0.0;
  }
  const double d = cfg.ema_decay;
  state.ema_mean = d * state.ema_mean + (1.0 - d) * raw_reward;
  const double dev = raw_reward - state.ema_mean;
  state.ema_var = d * state.ema_var + (1.0 - d) * dev * dev;
  const double z = (raw_reward - state.ema_mean) / (state.ema_std() + 1e-8);
  ArmStats& a = state.arms[arm];
  a.window.push_back(z);
  while (a.window.size() > cfg.window) a.window.pop_front();
  ++a.pulls;
  ++state.total;
  return z;
}

}  // namespace rvla::robust
