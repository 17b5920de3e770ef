#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rvla/common/random.hpp"
#include "rvla/flowpolicy/policy.hpp"
#include "rvla/manipsim/dataset.hpp"
#include "rvla/uncertainty/spec.hpp"

namespace rvla::eval {

// Maps the current observation to an action chunk. The world state is only
// read by privileged controllers such as the expert.
using Controller = std::function<sim::ActionChunk(const sim::WorldState&, const sim::Observation&, Stream&)>;

Controller policy_controller(const flow::PolicyParams& p, flow::Head head = flow::Head::kFlow,
                             int n_ode_steps = flow::kDefaultOdeSteps);
Controller expert_controller();

struct EvalConfig {
  int episodes_per_cell = 50;
  std::uint64_t seed = 0;
  std::vector<unc::PerturbationSpec> suite = unc::suite_default();
  int n_ode_steps = flow::kDefaultOdeSteps;
  double gamma = 1.0;
  int workers = 1;
};

void validate(const EvalConfig& cfg);

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  double discounted_return = 0.0;
};

// Any number of specs may act at once (mixed trials use one input and one
// output spec); each draws from its own stream keyed by its kind.
EpisodeResult run_episode(const Controller& policy, std::span<const unc::PerturbationSpec> specs, std::uint64_t seed,
                          double gamma = 1.0);
bool run_episode(const Controller& policy, const std::optional<unc::PerturbationSpec>& spec, std::uint64_t seed);

// Seed of episode `episode` in the cell keyed by `cell`.
std::uint64_t cell_seed(std::uint64_t seed, const std::string& cell, int episode);
std::string cell_key(const std::optional<unc::PerturbationSpec>& spec);

struct ReportRow {
  std::string modality;  // "none" for the clean row
  std::string kind;      // "clean" for the clean row
  std::map<std::string, double> params;
  std::optional<double> level;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  std::vector<int> outcomes;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct TTest {
  double t = 0.0;
  double p = 1.0;
  int n = 0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  bool degenerate = false;
  friend bool operator==(const TTest&, const TTest&) = default;
};

struct RobustnessReport {
  std::string checkpoint_id;
  std::uint64_t seed = 0;
  std::string timestamp;
  int episodes_per_cell = 0;
  int n_ode_steps = 0;
  double gamma = 1.0;
  std::vector<ReportRow> rows;  // clean row first, then the suite in order
  double average = 0.0;         // mean success rate over the suite rows
  std::optional<TTest> paired;
  std::string paired_against;
  friend bool operator==(const RobustnessReport&, const RobustnessReport&) = default;
};

// Runs fn(i) for i in [0, n) on `workers` threads; results land by index.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

RobustnessReport evaluate(const Controller& policy, const EvalConfig& cfg);
RobustnessReport evaluate(const flow::PolicyParams& p, const EvalConfig& cfg);

// All suite-row outcomes concatenated in suite order (clean row excluded).
std::vector<int> suite_outcomes(const RobustnessReport& r);

struct SweepPoint {
  double level = 0.0;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
};

// Every kind of the modality at each level, pooled. All cells share the
// same episode seeds, so level 0 reproduces the clean rate exactly.
std::vector<SweepPoint> sweep(const Controller& policy, unc::Modality modality, std::span<const double> levels,
                              const EvalConfig& cfg);
std::vector<SweepPoint> sweep(const Controller& policy, std::string_view modality, std::span<const double> levels,
                              const EvalConfig& cfg);
std::vector<int> clean_outcomes_for_sweep(const Controller& policy, const EvalConfig& cfg);

struct MixedTrial {
  unc::PerturbationSpec input;
  unc::PerturbationSpec output;
  std::uint64_t episode_seed = 0;
};

// Pure function of (seed, trials).
std::vector<MixedTrial> mixed_trials(std::uint64_t seed, int trials);

struct MixedReport {
  std::vector<MixedTrial> trials;
  std::vector<int> outcomes;
  int successes = 0;
  double success_rate = 0.0;
};

MixedReport evaluate_mixed(const Controller& policy, const EvalConfig& cfg, int trials);

TTest paired_t_test(std::span<const int> a, std::span<const int> b);
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

// successes / episodes to 3 decimals, half-up, computed exactly.
std::string format_rate(int successes, int episodes);

std::string report_to_json(const RobustnessReport& r);
RobustnessReport report_from_json(const std::string& text);
std::string report_to_csv(const RobustnessReport& r);
std::string sweep_to_csv(std::string_view modality, std::span<const SweepPoint> points);
void write_report(const RobustnessReport& r, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path);
RobustnessReport read_report(const std::filesystem::path& json_path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rvla::eval
