#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvla/flowpolicy/policy.hpp"
#include "rvla/manipsim/dataset.hpp"
#include "rvla/robusttrain/attacks.hpp"
#include "rvla/robusttrain/bandit.hpp"
#include "rvla/robusttrain/config.hpp"

namespace rvla::robust {

struct LogRow {
  int step = 0;
  double l_pi0 = 0.0;
  double l_out = 0.0;
  double l_in = 0.0;
  std::string arm = "-";
  double raw_reward = 0.0;
  double delta_inf = 0.0;
  double eta_inf = 0.0;
};

std::string format_log_row(const LogRow& r);
void write_log(std::ostream& os, std::span<const LogRow> rows);

struct StepOutcome {
  double l_pi0 = 0.0;
  double l_out = 0.0;
  double l_in = 0.0;
  double total = 0.0;
  double raw_reward = 0.0;
  double delta_inf = 0.0;
  double eta_inf = 0.0;
  bool ran_delta = false;
  bool ran_input = false;
};

// Batch indices for one step, drawn from the (seed, step) stream.
std::vector<std::size_t> batch_indices(std::uint64_t seed, int step, int batch, std::size_t dataset_size);

// Losses of one step. arm is required when the mode has an input term.
// With backprop set, gradients of the total are accumulated into p.
StepOutcome compute_step(flow::PolicyParams& p, std::span<const sim::Sample> batch, std::uint64_t seed, int step,
                         Mode mode, const unc::PerturbationSpec* arm, const AdvConfig& adv, bool backprop);

struct TrainResult {
  flow::PolicyParams params;
  std::vector<LogRow> log;
  BanditState bandit;
  std::int64_t skipped_updates = 0;
};

using StepCallback = std::function<void(const LogRow&)>;

TrainResult train(const sim::Dataset& data, const TrainConfig& cfg, const AdvConfig& adv,
                  const StepCallback& on_step = {});

}  // namespace rvla::robust
