#pragma once

#include <cstdint>
#include <deque>
#include <vector>

namespace rvla::robust {

struct BanditConfig {
  double alpha = 1.0;
  std::size_t window = 100;
  int min_samples = 10;
  double ema_decay = 0.9;
};

struct ArmStats {
  std::int64_t pulls = 0;
  std::deque<double> window;  // z-scored rewards, newest last
  double window_mean() const;
};

/// UCB state over a fixed arm set with global EMA reward normalisation.
struct BanditState {
  std::vector<ArmStats> arms;
  double ema_mean = 0.0;
  double ema_var = 0.0;
  std::int64_t total = 0;
  std::int64_t skipped = 0;

  explicit BanditState(std::size_t n_arms = 0) : arms(n_arms) {}
  double ema_std() const;
};

double ucb_score(double mean, std::int64_t total, std::int64_t pulls, double alpha);

// Arms below min_samples come first, fewest pulls then lowest index;
// otherwise the highest score wins, ties to the lowest index.
std::size_t ucb_select(const BanditState& state, const BanditConfig& cfg);

// Returns the normalised reward, or 0 when a non-finite reward is skipped.
double bandit_update(BanditState& state, std::size_t arm, double raw_reward, const BanditConfig& cfg);

}  // namespace rvla::robust
