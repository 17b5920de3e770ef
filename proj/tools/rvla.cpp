// rvla: dataset generation, training, evaluation and self-checks.
//
// Exit codes: 0 success, 1 runtime error (or a failing gradcheck), 2 usage error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rvla/common/errors.hpp"
#include "rvla/evalharness/eval.hpp"
#include "rvla/gradcore/gradcheck.hpp"
#include "rvla/robusttrain/attacks.hpp"
#include "rvla/robusttrain/train.hpp"

using namespace rvla;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading", path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// "flag" if the option was given, else "default".
std::string from(const CLI::App* app, const std::string& name) {
  const CLI::Option* opt = app->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0 ? "flag" : "default";
}

std::string file_checksum(const std::string& path) { return hex64(hash_bytes(read_file(path))); }

// Effective settings with where each value came from.
class Banner {
 public:
  explicit Banner(std::string verb) : verb_(std::move(verb)) {}
  void set(const std::string& key, const std::string& value, const std::string& source) {
    for (auto& e : entries_)
      if (e.key == key) {
        e.value = value;
        e.source = source;
        return;
      }
    entries_.push_back({key, value, source});
  }
  void print() const {
    std::cout << "# rvla " << verb_ << " (precedence: flag > config > env > default)\n";
    for (const auto& e : entries_) std::cout << "#   " << e.key << " = " << e.value << "  [" << e.source << "]\n";
  }

 private:
  struct Entry {
    std::string key, value, source;
  };
  std::string verb_;
  std::vector<Entry> entries_;
};

// Seed from the flag, else RVLA_SEED, else 0.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value, Banner& banner) {
  if (flag->count() > 0) {
    banner.set("seed", std::to_string(flag_value), "flag");
    return flag_value;
  }
  if (const char* env = std::getenv("RVLA_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*env == '\0' || *end != '\0') throw UsageError(std::string("RVLA_SEED is not an integer: ") + env);
    banner.set("seed", std::to_string(v), "env");
    return v;
  }
  banner.set("seed", "0", "default");
  return 0;
}

std::string now_utc() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    const std::time_t t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
  }
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Loaded {
  flow::PolicyParams params;
  flow::Head head = flow::Head::kFlow;
};

Loaded load(const std::string& stem) {
  Loaded l;
  l.params = flow::load_params(stem, &l.head);
  return l;
}

eval::Controller controller(const Loaded& l, int n_ode_steps) {
  return eval::policy_controller(l.params, l.head, n_ode_steps);
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad level: '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--levels is empty");
  return out;
}

void print_report(const eval::RobustnessReport& r) {
  std::printf("%-12s %-22s %8s %9s %7s\n", "modality", "kind", "episodes", "successes", "rate");
  for (const auto& row : r.rows)
    std::printf("%-12s %-22s %8d %9d %7s\n", row.modality.c_str(), row.kind.c_str(), row.episodes, row.successes,
                eval::format_rate(row.successes, row.episodes).c_str());
  std::printf("%-12s %-22s %8s %9s %7.3f\n", "", "average", "", "", r.average);
  if (r.paired)
    std::printf("paired vs %s: t %.4f p %.4g n %d%s\n", r.paired_against.c_str(), r.paired->t, r.paired->p,
                r.paired->n, r.paired->degenerate ? " (zero variance)" : "");
}

// ---- verbs -----------------------------------------------------------------

struct GenDataArgs {
  const CLI::App* app = nullptr;
  int episodes = 500;
  std::uint64_t seed = 0;
  std::string out;
  CLI::Option* seed_opt = nullptr;
};

int run_gen_data(const GenDataArgs& a) {
  Banner banner("gen-data");
  banner.set("episodes", std::to_string(a.episodes), from(a.app, "--episodes"));
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed, banner);
  banner.set("out", a.out, "flag");
  banner.print();
  const sim::Dataset d = sim::generate_dataset(a.episodes, seed);
  sim::write_dataset(a.out, d);
  std::printf("samples %zu\nchecksum %s\n", d.samples.size(), file_checksum(a.out).c_str());
  return 0;
}

struct TrainArgs {
  std::string data, out, config, log;
  std::map<std::string, std::string> flags;  // config keys given on the command line
  std::vector<std::pair<std::string, CLI::Option*>> flag_opts;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

std::vector<std::string> config_keys(const std::string& text) {
  std::vector<std::string> keys;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    k.erase(0, k.find_first_not_of(" \t"));
    k.erase(k.find_last_not_of(" \t") + 1);
    keys.push_back(k);
  }
  return keys;
}

int run_train(TrainArgs& a) {
  Banner banner("train");
  robust::TrainConfig cfg;
  robust::AdvConfig adv;
  std::map<std::string, std::string> source;
  auto note_all = [&](const std::string& src) {
    std::stringstream in(robust::format_config(cfg, adv));
    std::string line;
    while (std::getline(in, line)) source.emplace(line.substr(0, line.find(' ')), src);
  };
  note_all("default");
  cfg.seed = resolve_seed(a.seed_opt, a.seed, banner);
  if (a.seed_opt->count() == 0) source["seed"] = std::getenv("RVLA_SEED") ? "env" : "default";
  if (!a.config.empty()) {
    const std::string text = read_file(a.config);
    robust::apply_config_text(text, cfg, adv);
    for (const auto& k : config_keys(text)) source[k] = "config";
  }
  for (const auto& [key, opt] : a.flag_opts) {
    if (opt->count() == 0) continue;
    try {
      robust::set_config_value(key, a.flags[key], cfg, adv);
    } catch (const std::exception& e) {
      throw UsageError("--" + key + ": " + e.what());
    }
    source[key] = "flag";
  }
  if (a.seed_opt->count() > 0) {
    cfg.seed = a.seed;
    source["seed"] = "flag";
  }
  try {
    robust::validate(cfg);
    robust::validate(adv);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  Banner effective("train");
  effective.set("data", a.data, "flag");
  effective.set("out", a.out, "flag");
  if (!a.config.empty()) effective.set("config", a.config, "flag");
  std::stringstream in(robust::format_config(cfg, adv));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    const std::string key = line.substr(0, eq);
    effective.set(key, line.substr(eq + 3), source[key]);
  }
  effective.print();

  const sim::Dataset data = sim::read_dataset(a.data);
  const auto t0 = std::chrono::steady_clock::now();
  const int report_every = std::max(1, cfg.steps / 10);
  const robust::TrainResult r = robust::train(data, cfg, adv, [&](const robust::LogRow& row) {
    if ((row.step + 1) % report_every == 0 || row.step + 1 == cfg.steps)
      std::printf("step %d L_pi0 %.4f L_out %.4f L_in %.4f arm %s\n", row.step + 1, row.l_pi0, row.l_out, row.l_in,
                  row.arm.c_str());
    std::fflush(stdout);
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  flow::save_params(a.out, r.params, flow::Head::kFlow,
                    {{"mode", robust::mode_name(cfg.mode)},
                     {"steps", std::to_string(cfg.steps)},
                     {"seed", std::to_string(cfg.seed)},
                     {"data_checksum", file_checksum(a.data)}});
  const std::string log_path = a.log.empty() ? a.out + ".log.tsv" : a.log;
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot open for writing", log_path);
  robust::write_log(log, r.log);
  std::printf("trained %d steps in %.1fs, skipped updates %ld\n", cfg.steps, seconds,
              static_cast<long>(r.skipped_updates));
  if (robust::uses_input_term(cfg.mode)) {
    std::printf("arm pulls:");
    for (std::size_t i = 0; i < cfg.arms.size(); ++i)
      std::printf(" %s=%ld", unc::kind_name(cfg.arms[i]), static_cast<long>(r.bandit.arms[i].pulls));
    std::printf("\n");
  }
  std::printf("checksum %s\n", hex64(flow::params_checksum(r.params)).c_str());
  return 0;
}

struct EvalArgs {
  const CLI::App* app = nullptr;
  std::string ckpt, suite, json, csv, against;
  int episodes = 50, workers = 1, ode_steps = flow::kDefaultOdeSteps;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

eval::EvalConfig eval_config(const EvalArgs& a, Banner& banner) {
  eval::EvalConfig cfg;
  cfg.episodes_per_cell = a.episodes;
  cfg.workers = a.workers;
  cfg.n_ode_steps = a.ode_steps;
  cfg.gamma = a.gamma;
  cfg.seed = resolve_seed(a.seed_opt, a.seed, banner);
  banner.set("episodes", std::to_string(a.episodes), from(a.app, "--episodes"));
  banner.set("workers", std::to_string(a.workers), from(a.app, "--workers"));
  banner.set("n_ode_steps", std::to_string(a.ode_steps), from(a.app, "--ode-steps"));
  banner.set("gamma", unc::format_double(a.gamma), from(a.app, "--gamma"));
  return cfg;
}

int run_eval(const EvalArgs& a) {
  Banner banner("eval");
  banner.set("ckpt", a.ckpt, "flag");
  eval::EvalConfig cfg = eval_config(a, banner);
  if (!a.suite.empty()) cfg.suite = unc::parse_suite(read_file(a.suite));
  banner.set("suite", a.suite.empty() ? "default (17 kinds)" : a.suite, a.suite.empty() ? "default" : "flag");
  if (!a.against.empty()) banner.set("against", a.against, "flag");
  banner.print();
  eval::validate(cfg);

  const Loaded l = load(a.ckpt);
  eval::RobustnessReport r = eval::evaluate(controller(l, cfg.n_ode_steps), cfg);
  r.checkpoint_id = hex64(flow::params_checksum(l.params));
  r.timestamp = now_utc();
  if (!a.against.empty()) {
    const Loaded other = load(a.against);
    const eval::RobustnessReport o = eval::evaluate(controller(other, cfg.n_ode_steps), cfg);
    const auto mine = eval::suite_outcomes(r), theirs = eval::suite_outcomes(o);
    r.paired = eval::paired_t_test(mine, theirs);
    r.paired_against = hex64(flow::params_checksum(other.params));
    std::printf("against average %.3f\n", o.average);
  }
  print_report(r);
  if (!a.json.empty()) eval::write_text(a.json, eval::report_to_json(r));
  if (!a.csv.empty()) eval::write_text(a.csv, eval::report_to_csv(r));
  std::printf("csv checksum %s\n", hex64(hash_bytes(eval::report_to_csv(r))).c_str());
  return 0;
}

struct SweepArgs {
  const CLI::App* app = nullptr;
  EvalArgs e;
  std::string modality, levels = "0,0.01,0.025,0.05,0.1";
};

int run_sweep(const SweepArgs& a) {
  Banner banner("sweep");
  banner.set("ckpt", a.e.ckpt, "flag");
  banner.set("modality", a.modality, "flag");
  banner.set("levels", a.levels, from(a.app, "--levels"));
  const eval::EvalConfig cfg = eval_config(a.e, banner);
  banner.print();
  const std::vector<double> levels = parse_levels(a.levels);
  const Loaded l = load(a.e.ckpt);
  const auto pts = eval::sweep(controller(l, cfg.n_ode_steps), a.modality, levels, cfg);
  const std::string csv = eval::sweep_to_csv(a.modality, pts);
  std::cout << csv;
  if (!a.e.csv.empty()) eval::write_text(a.e.csv, csv);
  return 0;
}

struct MixedArgs {
  const CLI::App* app = nullptr;
  std::string ckpt_a, ckpt_b;
  int trials = 200, workers = 1;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_mixed(const MixedArgs& a) {
  Banner banner("eval-mixed");
  banner.set("ckpt-a", a.ckpt_a, "flag");
  banner.set("ckpt-b", a.ckpt_b, "flag");
  banner.set("trials", std::to_string(a.trials), from(a.app, "--trials"));
  banner.set("workers", std::to_string(a.workers), from(a.app, "--workers"));
  eval::EvalConfig cfg;
  cfg.seed = resolve_seed(a.seed_opt, a.seed, banner);
  cfg.workers = a.workers;
  banner.print();
  const Loaded la = load(a.ckpt_a), lb = load(a.ckpt_b);
  const eval::MixedReport ra = eval::evaluate_mixed(controller(la, cfg.n_ode_steps), cfg, a.trials);
  const eval::MixedReport rb = eval::evaluate_mixed(controller(lb, cfg.n_ode_steps), cfg, a.trials);
  const eval::TTest t = eval::paired_t_test(ra.outcomes, rb.outcomes);
  std::printf("a %s %d/%d\nb %s %d/%d\n", a.ckpt_a.c_str(), ra.successes, a.trials, a.ckpt_b.c_str(), rb.successes,
              a.trials);
  std::printf("paired a-b: mean %.4f t %.4f p %.4g%s\n", t.mean_diff, t.t, t.p, t.degenerate ? " (zero variance)" : "");
  return 0;
}

struct AttackArgs {
  const CLI::App* app = nullptr;
  std::string ckpt, data;
  int index = 0;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

int run_attack(const AttackArgs& a) {
  Banner banner("attack-demo");
  banner.set("ckpt", a.ckpt, "flag");
  banner.set("data", a.data, "flag");
  banner.set("index", std::to_string(a.index), from(a.app, "--index"));
  const std::uint64_t seed = resolve_seed(a.seed_opt, a.seed, banner);
  const robust::AdvConfig adv;
  banner.set("eps_action", unc::format_double(adv.eps_action), "default");
  banner.set("pgd_steps_action", std::to_string(adv.pgd_steps_action), "default");
  banner.print();
  Loaded l = load(a.ckpt);
  const sim::Dataset d = sim::read_dataset(a.data);
  if (a.index < 0 || static_cast<std::size_t>(a.index) >= d.samples.size())
    throw UsageError("--index outside the dataset (" + std::to_string(d.samples.size()) + " samples)");
  const std::span<const sim::Sample> one(&d.samples[static_cast<std::size_t>(a.index)], 1);
  Stream draw_rng(derive_seed(seed, {hash_tag("draws")}));
  const flow::FlowDraws draws = flow::sample_draws(1, draw_rng);
  Stream rng(derive_seed(seed, {hash_tag("delta")}));
  const robust::PgdResult r = robust::worst_case_delta(l.params, one, draws, adv, rng);
  std::printf("clean loss %.6f\nadversarial loss %.6f\ndelta", r.zero_loss, r.best_loss);
  for (double v : r.best.data()) std::printf(" %+.4f", v);
  std::printf("\ndelta inf norm %.4f (best iterate %d)\n", robust::inf_norm(r.best), r.best_iterate);
  return 0;
}

int run_gradcheck(std::uint64_t seed_flag, const CLI::Option* seed_opt) {
  Banner banner("gradcheck");
  const std::uint64_t seed = resolve_seed(seed_opt, seed_flag, banner);
  banner.set("tolerance", "1e-5", "default");
  banner.print();
  auto results = check_primitives(seed);
  const std::size_t primitives = results.size();
  for (auto& r : flow::check_flow_loss(seed)) results.push_back(std::move(r));
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s %-40s rel %.3e\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.rel_error);
    failed += r.passed ? 0 : 1;
  }
  std::printf("%zu primitive checks, %zu flow_loss checks, %d failed\n", primitives, results.size() - primitives,
              failed);
  return failed == 0 ? 0 : 1;
}

int run_report(const std::string& json, const std::string& csv) {
  const eval::RobustnessReport r = eval::read_report(json);
  std::printf("checkpoint %s seed %llu episodes/cell %d timestamp %s\n", r.checkpoint_id.c_str(),
              static_cast<unsigned long long>(r.seed), r.episodes_per_cell, r.timestamp.c_str());
  print_report(r);
  if (!csv.empty()) eval::write_text(csv, eval::report_to_csv(r));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rvla: multi-modal robustness for a flow-matching visuomotor policy"};
  app.require_subcommand(1);
  app.fallthrough(false);

  GenDataArgs gen;
  auto* g = app.add_subcommand("gen-data", "Roll the scripted expert and write a dataset");
  g->add_option("--episodes", gen.episodes, "Episodes to roll out")->capture_default_str()->check(CLI::PositiveNumber);
  gen.app = g;
  gen.seed_opt = g->add_option("--seed", gen.seed, "Root seed (else RVLA_SEED, else 0)");
  g->add_option("--out", gen.out, "Dataset path")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a policy in one of the four modes");
  t->add_option("--data", tr.data, "Dataset path")->required();
  t->add_option("--out", tr.out, "Checkpoint stem")->required();
  t->add_option("--config", tr.config, "key = value config file");
  t->add_option("--log", tr.log, "Training log (TSV); default <out>.log.tsv");
  tr.seed_opt = t->add_option("--seed", tr.seed, "Root seed (else config, else RVLA_SEED, else 0)");
  for (const char* key : {"mode", "steps", "batch", "lr", "arms", "lambda_in", "lambda_out", "eps_action",
                          "eps_obs", "ucb_alpha"}) {
    std::string flag = std::string("--") + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    auto* opt = t->add_option(flag, tr.flags[key], std::string("Overrides config key ") + key);
    if (std::string(key) == "mode") opt->check(CLI::IsMember({"baseline", "robust", "no_in", "no_out"}));
    tr.flag_opts.emplace_back(key, opt);
  }

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on the perturbation suite");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint stem")->required();
  e->add_option("--suite", ev.suite, "Suite file, one spec per line");
  e->add_option("--episodes", ev.episodes, "Episodes per cell")->capture_default_str()->check(CLI::PositiveNumber);
  ev.app = e;
  ev.seed_opt = e->add_option("--seed", ev.seed, "Root seed (else RVLA_SEED, else 0)");
  e->add_option("--json", ev.json, "JSON report path");
  e->add_option("--csv", ev.csv, "CSV report path");
  e->add_option("--against", ev.against, "Second checkpoint for a paired t-test");
  e->add_option("--workers", ev.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--ode-steps", ev.ode_steps, "Euler steps per chunk")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--gamma", ev.gamma, "Discount")->capture_default_str();

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Success rate against a unified noise level");
  s->add_option("--ckpt", sw.e.ckpt, "Checkpoint stem")->required();
  s->add_option("--modality", sw.modality, "action, observation, environment or instruction")
      ->required()
      ->check(CLI::IsMember({"action", "observation", "environment", "instruction"}));
  s->add_option("--levels", sw.levels, "Comma-separated levels in [0, 1]")->capture_default_str();
  s->add_option("--episodes", sw.e.episodes, "Episodes per kind and level")->capture_default_str()->check(CLI::PositiveNumber);
  sw.app = sw.e.app = s;
  sw.e.seed_opt = s->add_option("--seed", sw.e.seed, "Root seed (else RVLA_SEED, else 0)");
  s->add_option("--csv", sw.e.csv, "CSV output path");
  s->add_option("--workers", sw.e.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  MixedArgs mx;
  auto* m = app.add_subcommand("eval-mixed", "Paired comparison under one input and one output perturbation");
  m->add_option("--ckpt-a", mx.ckpt_a, "First checkpoint stem")->required();
  m->add_option("--ckpt-b", mx.ckpt_b, "Second checkpoint stem")->required();
  m->add_option("--trials", mx.trials, "Mixed trials")->capture_default_str()->check(CLI::PositiveNumber);
  mx.app = m;
  mx.seed_opt = m->add_option("--seed", mx.seed, "Root seed (else RVLA_SEED, else 0)");
  m->add_option("--workers", mx.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  AttackArgs at;
  auto* a = app.add_subcommand("attack-demo", "Worst-case action offset for one dataset sample");
  a->add_option("--ckpt", at.ckpt, "Checkpoint stem")->required();
  a->add_option("--data", at.data, "Dataset path")->required();
  a->add_option("--index", at.index, "Sample index")->capture_default_str();
  at.app = a;
  at.seed_opt = a->add_option("--seed", at.seed, "Root seed (else RVLA_SEED, else 0)");

  std::uint64_t gc_seed = 0;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference checks of every primitive and the flow loss");
  auto* gc_seed_opt = gc->add_option("--seed", gc_seed, "Input seed (else RVLA_SEED, else 0)");

  std::string rep_json, rep_csv;
  auto* rp = app.add_subcommand("report", "Print a saved JSON report");
  rp->add_option("--json", rep_json, "JSON report path")->required();
  rp->add_option("--csv", rep_csv, "Also write the CSV form here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: " << err.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*g) return run_gen_data(gen);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*s) return run_sweep(sw);
    if (*m) return run_mixed(mx);
    if (*a) return run_attack(at);
    if (*gc) return run_gradcheck(gc_seed, gc_seed_opt);
    if (*rp) return run_report(rep_json, rep_csv);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
