#include "rvla/evalharness/eval.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "rvla/common/errors.hpp"
#include "rvla/uncertainty/perturb.hpp"

namespace rvla::eval {

using unc::Kind;
using unc::Modality;
using unc::PerturbationSpec;

Controller policy_controller(const flow::PolicyParams& p, flow::Head head, int n_ode_steps) {
  auto params = std::make_shared<flow::PolicyParams>(p);
  if (head == flow::Head::kToken)
    return [params](const sim::WorldState&, const sim::Observation& obs, Stream&) {
      return flow::sample_tokens(*params, obs);
    };
  return [params, n_ode_steps](const sim::WorldState&, const sim::Observation& obs, Stream& rng) {
    return flow::sample_actions(*params, obs, n_ode_steps, rng);
  };
}

Controller expert_controller() {
  return [](const sim::WorldState& s, const sim::Observation&, Stream&) {
    sim::WorldState look = s;
    sim::ActionChunk chunk{};
    sim::Action a{};
    bool done = false;
    for (int h = 0; h < sim::kHorizon; ++h) {
      if (!done) {
        a = sim::expert_action(look);
        done = sim::step(look, a).done;
      }
      for (int j = 0; j < sim::kActionDim; ++j) chunk[static_cast<std::size_t>(h * sim::kActionDim + j)] = a[static_cast<std::size_t>(j)];
    }
    return chunk;
  };
}

void validate(const EvalConfig& cfg) {
  if (cfg.episodes_per_cell < 1) throw ContractError("episodes_per_cell must be >= 1");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw ContractError("gamma must lie in (0, 1]");
  if (cfg.n_ode_steps < 1) throw ContractError("n_ode_steps must be >= 1");
  if (cfg.workers < 1) throw ContractError("workers must be >= 1");
}

namespace {

struct Active {
  const PerturbationSpec* spec;
  Stream rng;
};

}  // namespace

EpisodeResult run_episode(const Controller& policy, std::span<const PerturbationSpec> specs, std::uint64_t seed,
                          double gamma) {
  sim::WorldState s = sim::reset(seed);
  Stream policy_rng(derive_seed(seed, {hash_tag("policy")}));
  std::vector<Active> active;
  active.reserve(specs.size());
  for (const auto& sp : specs)
    active.push_back({&sp, Stream(derive_seed(seed, {hash_tag("perturb"), static_cast<std::uint64_t>(sp.kind)}))});

  sim::Tokens tokens = sim::instruction_for_task(s);
  std::optional<unc::ForceSchedule> force;
  Active* force_src = nullptr;
  Active* light_src = nullptr;
  unc::LightingParams lp;
  double light_mix = 0.0;
  sim::LightingState sampled, light;
  for (auto& a : active) {
    switch (a.spec->kind) {
      case Kind::kDistractors:
        s = unc::spawn_distractors(s, a.rng, static_cast<int>(std::lround(a.spec->param("count"))));
        break;
      case Kind::kExternalForce:
        force = unc::make_force_schedule(*a.spec, a.rng);
        force_src = &a;
        break;
      case Kind::kLighting:
        lp = unc::lighting_params(*a.spec);
        light_mix = a.spec->param("mix");
        light_src = &a;
        break;
      default:
        if (a.spec->modality() == Modality::kInstruction) tokens = unc::perturb_instruction(tokens, *a.spec, a.rng);
        break;
    }
  }
  auto relight = [&] {
    if (!light_src) return;
    sampled = unc::sample_lighting(sampled, s.step_count, light_src->rng, lp);
    light = unc::blend_lighting(sampled, light_mix);
  };
  relight();

  EpisodeResult out;
  for (;;) {
    sim::Observation obs = sim::observe(s, light);
    obs.tokens = tokens;
    for (auto& a : active)
      if (a.spec->modality() == Modality::kObservation) obs.image = unc::perturb_image(obs.image, *a.spec, a.rng);
    sim::ActionChunk chunk = policy(s, obs, policy_rng);
    for (auto& a : active)
      if (a.spec->modality() == Modality::kAction) chunk = unc::perturb_action(chunk, *a.spec, a.rng);
    for (int h = 0; h < sim::kHorizon; ++h) {
      sim::Vec2 push{};
      if (force) std::tie(push, *force) = unc::external_force_step(*force, s.step_count, force_src->rng);
      sim::Action act{};
      for (int j = 0; j < sim::kActionDim; ++j)
        act[static_cast<std::size_t>(j)] = chunk[static_cast<std::size_t>(h * sim::kActionDim + j)];
      const sim::StepResult r = sim::step(s, act, push);
      relight();
      if (r.done) {
        out.success = r.success;
        out.steps = s.step_count;
        out.discounted_return = r.success ? std::pow(gamma, s.step_count - 1) : 0.0;
        return out;
      }
    }
  }
}

bool run_episode(const Controller& policy, const std::optional<PerturbationSpec>& spec, std::uint64_t seed) {
  if (!spec) return run_episode(policy, std::span<const PerturbationSpec>{}, seed).success;
  return run_episode(policy, std::span(&*spec, 1), seed).success;
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& cell, int episode) {
  return derive_seed(seed, {hash_tag(cell.c_str()), static_cast<std::uint64_t>(episode)});
}

std::string cell_key(const std::optional<PerturbationSpec>& spec) {
  return spec ? unc::format_spec(*spec) : std::string("clean");
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

ReportRow run_cell(const Controller& policy, const std::optional<PerturbationSpec>& spec, const std::string& key,
                   const EvalConfig& cfg) {
  ReportRow row;
  if (spec) {
    row.modality = unc::modality_name(spec->modality());
    row.kind = unc::kind_name(spec->kind);
    row.params = spec->params;
    row.level = spec->level;
  } else {
    row.modality = "none";
    row.kind = "clean";
  }
  row.episodes = cfg.episodes_per_cell;
  row.outcomes.assign(static_cast<std::size_t>(cfg.episodes_per_cell), 0);
  std::vector<double> returns(row.outcomes.size());
  std::span<const PerturbationSpec> specs;
  if (spec) specs = std::span(&*spec, 1);
  parallel_for(cfg.episodes_per_cell, cfg.workers, [&](int e) {
    const EpisodeResult r = run_episode(policy, specs, cell_seed(cfg.seed, key, e), cfg.gamma);
    row.outcomes[static_cast<std::size_t>(e)] = r.success ? 1 : 0;
    returns[static_cast<std::size_t>(e)] = r.discounted_return;
  });
  for (std::size_t e = 0; e < returns.size(); ++e) {
    row.successes += row.outcomes[e];
    row.mean_return += returns[e];
  }
  row.mean_return /= static_cast<double>(row.episodes);
  row.success_rate = static_cast<double>(row.successes) / static_cast<double>(row.episodes);
  return row;
}

}  // namespace

RobustnessReport evaluate(const Controller& policy, const EvalConfig& cfg) {
  validate(cfg);
  RobustnessReport r;
  r.seed = cfg.seed;
  r.episodes_per_cell = cfg.episodes_per_cell;
  r.n_ode_steps = cfg.n_ode_steps;
  r.gamma = cfg.gamma;
  r.rows.push_back(run_cell(policy, std::nullopt, cell_key(std::nullopt), cfg));
  for (const auto& spec : cfg.suite) {
    r.rows.push_back(run_cell(policy, spec, cell_key(spec), cfg));
    r.average += r.rows.back().success_rate;
  }
  if (!cfg.suite.empty()) r.average /= static_cast<double>(cfg.suite.size());
  return r;
}

RobustnessReport evaluate(const flow::PolicyParams& p, const EvalConfig& cfg) {
  RobustnessReport r = evaluate(policy_controller(p, flow::Head::kFlow, cfg.n_ode_steps), cfg);
  std::ostringstream id;
  id << std::hex << flow::params_checksum(p);
  r.checkpoint_id = id.str();
  return r;
}

std::vector<int> suite_outcomes(const RobustnessReport& r) {
  std::vector<int> out;
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    out.insert(out.end(), r.rows[i].outcomes.begin(), r.rows[i].outcomes.end());
  return out;
}

namespace {

const std::string kSweepCell = "sweep";

}  // namespace

std::vector<SweepPoint> sweep(const Controller& policy, Modality modality, std::span<const double> levels,
                              const EvalConfig& cfg) {
  validate(cfg);
  for (double l : levels)
    if (!(l >= 0.0 && l <= 1.0)) throw ContractError("sweep levels must lie in [0, 1]");
  std::vector<Kind> kinds;
  for (const auto& s : unc::suite_for_modality(modality)) kinds.push_back(s.kind);
  std::vector<SweepPoint> out;
  for (double level : levels) {
    SweepPoint pt{level, 0, 0, 0.0};
    for (Kind k : kinds) {
      const PerturbationSpec spec = unc::at_level(k, level);
      std::vector<int> wins(static_cast<std::size_t>(cfg.episodes_per_cell), 0);
      parallel_for(cfg.episodes_per_cell, cfg.workers, [&](int e) {
        wins[static_cast<std::size_t>(e)] =
            run_episode(policy, std::span(&spec, 1), cell_seed(cfg.seed, kSweepCell, e), cfg.gamma).success;
      });
      for (int w : wins) pt.successes += w;
      pt.episodes += cfg.episodes_per_cell;
    }
    pt.success_rate = pt.episodes ? static_cast<double>(pt.successes) / pt.episodes : 0.0;
    out.push_back(pt);
  }
  return out;
}

std::vector<SweepPoint> sweep(const Controller& policy, std::string_view modality, std::span<const double> levels,
                              const EvalConfig& cfg) {
  return sweep(policy, unc::modality_from_name(modality), levels, cfg);
}

std::vector<int> clean_outcomes_for_sweep(const Controller& policy, const EvalConfig& cfg) {
  validate(cfg);
  std::vector<int> wins(static_cast<std::size_t>(cfg.episodes_per_cell), 0);
  parallel_for(cfg.episodes_per_cell, cfg.workers, [&](int e) {
    wins[static_cast<std::size_t>(e)] =
        run_episode(policy, std::span<const PerturbationSpec>{}, cell_seed(cfg.seed, kSweepCell, e), cfg.gamma).success;
  });
  return wins;
}

std::vector<MixedTrial> mixed_trials(std::uint64_t seed, int trials) {
  if (trials < 1) throw ContractError("trials must be >= 1");
  std::vector<PerturbationSpec> inputs, outputs;
  for (const auto& s : unc::suite_default()) (unc::is_input_kind(s.kind) ? inputs : outputs).push_back(s);
  std::vector<MixedTrial> out;
  for (int t = 0; t < trials; ++t) {
    Stream rng(derive_seed(seed, {hash_tag("mixed"), static_cast<std::uint64_t>(t)}));
    MixedTrial m;
    m.input = inputs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(inputs.size()) - 1))];
    m.output = outputs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(outputs.size()) - 1))];
    m.episode_seed = derive_seed(seed, {hash_tag("mixed-episode"), static_cast<std::uint64_t>(t)});
    out.push_back(std::move(m));
  }
  return out;
}

MixedReport evaluate_mixed(const Controller& policy, const EvalConfig& cfg, int trials) {
  validate(cfg);
  MixedReport r;
  r.trials = mixed_trials(cfg.seed, trials);
  r.outcomes.assign(r.trials.size(), 0);
  parallel_for(trials, cfg.workers, [&](int t) {
    const MixedTrial& m = r.trials[static_cast<std::size_t>(t)];
    const PerturbationSpec pair[] = {m.input, m.output};
    r.outcomes[static_cast<std::size_t>(t)] = run_episode(policy, pair, m.episode_seed, cfg.gamma).success;
  });
  for (int o : r.outcomes) r.successes += o;
  r.success_rate = static_cast<double>(r.successes) / trials;
  return r;
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("paired_t_test: length mismatch");
  if (a.size() < 2) throw ContractError("paired_t_test: need at least two pairs");
  const std::size_t n = a.size();
  TTest r;
  r.n = static_cast<int>(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    all_zero = all_zero && d == 0.0;
    ss += (d - mean) * (d - mean);
  }
  r.mean_diff = mean;
  r.sd_diff = std::sqrt(ss / static_cast<double>(n - 1));
  if (all_zero) return r;
  if (r.sd_diff == 0.0) {
    r.t = std::copysign(INFINITY, mean);
    r.p = 0.0;
    r.degenerate = true;
    return r;
  }
  r.t = mean / (r.sd_diff / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

TTest paired_t_test(std::span<const int> a, std::span<const int> b) {
  const std::vector<double> da(a.begin(), a.end()), db(b.begin(), b.end());
  return paired_t_test(std::span<const double>(da), std::span<const double>(db));
}

std::string format_rate(int successes, int episodes) {
  if (episodes < 1 || successes < 0 || successes > episodes) throw ContractError("format_rate: bad counts");
  const long long milli = (2000LL * successes + episodes) / (2LL * episodes);
  std::string frac = std::to_string(milli % 1000);
  frac.insert(0, 3 - frac.size(), '0');
  return std::to_string(milli / 1000) + "." + frac;
}

namespace {

using nlohmann::ordered_json;

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

std::string report_to_json(const RobustnessReport& r) {
  ordered_json j;
  j["report_version"] = 1;
  j["metadata"] = {{"checkpoint_id", r.checkpoint_id},
                   {"seed", r.seed},
                   {"timestamp", r.timestamp},
                   {"episodes_per_cell", r.episodes_per_cell},
                   {"n_ode_steps", r.n_ode_steps},
                   {"gamma", r.gamma}};
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json params = ordered_json::object();
    for (const auto& [k, v] : row.params) params[k] = v;
    rows.push_back({{"modality", row.modality},
                    {"kind", row.kind},
                    {"params", params},
                    {"level", row.level ? ordered_json(*row.level) : ordered_json(nullptr)},
                    {"episodes", row.episodes},
                    {"successes", row.successes},
                    {"success_rate", row.success_rate},
                    {"mean_return", row.mean_return},
                    {"outcomes", row.outcomes}});
  }
  j["rows"] = rows;
  j["average"] = r.average;
  if (r.paired) {
    j["paired"] = {{"against", r.paired_against},
                   {"t", number_or_null(r.paired->t)},
                   {"p", r.paired->p},
                   {"n", r.paired->n},
                   {"mean_diff", r.paired->mean_diff},
                   {"sd_diff", r.paired->sd_diff},
                   {"degenerate", r.paired->degenerate}};
  }
  return j.dump(2) + "\n";
}

RobustnessReport report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("report_version").get<int>() != 1) throw FormatError("unsupported report_version");
    RobustnessReport r;
    const auto& m = j.at("metadata");
    r.checkpoint_id = m.at("checkpoint_id").get<std::string>();
    r.seed = m.at("seed").get<std::uint64_t>();
    r.timestamp = m.at("timestamp").get<std::string>();
    r.episodes_per_cell = m.at("episodes_per_cell").get<int>();
    r.n_ode_steps = m.at("n_ode_steps").get<int>();
    r.gamma = m.at("gamma").get<double>();
    for (const auto& jr : j.at("rows")) {
      ReportRow row;
      row.modality = jr.at("modality").get<std::string>();
      row.kind = jr.at("kind").get<std::string>();
      for (const auto& [k, v] : jr.at("params").items()) row.params[k] = v.get<double>();
      if (!jr.at("level").is_null()) row.level = jr.at("level").get<double>();
      row.episodes = jr.at("episodes").get<int>();
      row.successes = jr.at("successes").get<int>();
      row.success_rate = jr.at("success_rate").get<double>();
      row.mean_return = jr.at("mean_return").get<double>();
      row.outcomes = jr.at("outcomes").get<std::vector<int>>();
      r.rows.push_back(std::move(row));
    }
    r.average = j.at("average").get<double>();
    if (j.contains("paired")) {
      const auto& p = j.at("paired");
      TTest t;
      t.mean_diff = p.at("mean_diff").get<double>();
      t.t = p.at("t").is_null() ? std::copysign(INFINITY, t.mean_diff) : p.at("t").get<double>();
      t.p = p.at("p").get<double>();
      t.n = p.at("n").get<int>();
      t.sd_diff = p.at("sd_diff").get<double>();
      t.degenerate = p.at("degenerate").get<bool>();
      r.paired = t;
      r.paired_against = p.at("against").get<std::string>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report schema mismatch: ") + e.what());
  }
}

std::string report_to_csv(const RobustnessReport& r) {
  std::string out = "modality,kind,episodes,successes,success_rate\n";
  for (const auto& row : r.rows)
    out += row.modality + "," + row.kind + "," + std::to_string(row.episodes) + "," + std::to_string(row.successes) +
           "," + format_rate(row.successes, row.episodes) + "\n";
  return out;
}

std::string sweep_to_csv(std::string_view modality, std::span<const SweepPoint> points) {
  std::string out = "modality,level,success_rate\n";
  for (const auto& p : points)
    out += std::string(modality) + "," + unc::format_double(p.level) + "," + format_rate(p.successes, p.episodes) +
           "\n";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing", path.string());
  f << text;
  f.close();
  if (!f) throw IoError("write failed", path.string());
}

void write_report(const RobustnessReport& r, const std::filesystem::path& json_path,
                  const std::filesystem::path& csv_path) {
  write_text(json_path, report_to_json(r));
  write_text(csv_path, report_to_csv(r));
}

RobustnessReport read_report(const std::filesystem::path& json_path) {
  std::ifstream f(json_path, std::ios::binary);
  if (!f) throw IoError("cannot open", json_path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return report_from_json(ss.str());
}

}  // namespace rvla::eval
