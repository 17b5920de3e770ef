#include "rvla/robusttrain/train.hpp"

#include <algorithm>
#include <ostream>

#include "rvla/common/errors.hpp"
#include "rvla/gradcore/adam.hpp"
#include "rvla/manipsim/language.hpp"

namespace rvla::robust {

namespace {

std::uint64_t step_key(std::uint64_t seed, const char* tag, int step) {
  return derive_seed(seed, {hash_tag(tag), static_cast<std::uint64_t>(step)});
}

void check_dataset(const sim::Dataset& data) {
  if (data.samples.empty()) throw ContractError("training needs a non-empty dataset");
  const int vocab = sim::vocab_size();
  for (const auto& s : data.samples)
    for (int id : s.obs.tokens)
      if (id < 0 || id >= vocab) throw FormatError("dataset token id " + std::to_string(id) + " outside vocabulary");
}

}  // namespace

std::string format_log_row(const LogRow& r) {
  using unc::format_double;
  return std::to_string(r.step) + "\t" + format_double(r.l_pi0) + "\t" + format_double(r.l_out) + "\t" +
         format_double(r.l_in) + "\t" + r.arm + "\t" + format_double(r.raw_reward) + "\t" +
         format_double(r.delta_inf) + "\t" + format_double(r.eta_inf);
}

void write_log(std::ostream& os, std::span<const LogRow> rows) {
  os << "step\tL_pi0\tL_out\tL_in\tarm\traw_reward\tdelta_inf_norm\teta_inf_norm\n";
  for (const auto& r : rows) os << format_log_row(r) << '\n';
}

std::vector<std::size_t> batch_indices(std::uint64_t seed, int step, int batch, std::size_t dataset_size) {
  if (dataset_size == 0) throw ContractError("empty dataset");
  Stream rng(step_key(seed, "batch", step));
  std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(dataset_size) - 1));
  return idx;
}

StepOutcome compute_step(flow::PolicyParams& p, std::span<const sim::Sample> batch, std::uint64_t seed, int step,
                         Mode mode, const unc::PerturbationSpec* arm, const AdvConfig& adv, bool backprop) {
  if (batch.empty()) throw ContractError("empty batch");
  const std::size_t n = batch.size();
  Stream draw_rng(step_key(seed, "draws", step));
  const flow::FlowDraws draws = flow::sample_draws(n, draw_rng);
  const Tensor a1 = flow::actions_tensor(batch);
  std::vector<sim::Observation> obs;
  obs.reserve(n);
  for (const auto& s : batch) obs.push_back(s.obs);
  const flow::ObsBatch clean = flow::make_batch(obs);

  StepOutcome out;
  Graph g;
  const flow::Bound b = flow::bind(g, p);
  const NodeId feats = flow::encode(g, b, clean);
  const NodeId l_pi0 = flow::flow_loss_node(g, b, feats, a1, draws);
  out.l_pi0 = g.value(l_pi0).item();
  NodeId total = l_pi0;

  if (uses_output_term(mode)) {
    Stream rng(step_key(seed, "delta", step));
    const PgdResult d = worst_case_delta(p, g.value(feats), a1, draws, adv, rng);
    const NodeId dn = g.constant(d.best);
    const NodeId l_out = flow::flow_loss_node(g, b, feats, a1, draws, &dn);
    out.l_out = g.value(l_out).item();
    out.delta_inf = inf_norm(d.best);
    out.ran_delta = true;
    total = g.add(total, g.scale(l_out, adv.lambda_out));
  }

  if (uses_input_term(mode)) {
    if (arm == nullptr) throw ContractError("input term needs an arm");
    if (!unc::is_input_kind(arm->kind))
      throw ContractError(std::string("arm ") + unc::kind_name(arm->kind) + " is not an input perturbation");
    std::vector<sim::Observation> noisy;
    noisy.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Stream rng(derive_seed(seed, {hash_tag("arm"), static_cast<std::uint64_t>(step), i}));
      noisy.push_back(apply_arm(obs[i], *arm, rng));
    }
    const flow::ObsBatch nb = flow::make_batch(noisy);
    Tensor x = nb.images;
    double perturbed = 0.0;
    const bool image_arm = unc::is_image_kind(arm->kind);
    if (image_arm) {
      Stream rng(step_key(seed, "eta", step));
      const PgdResult eta = worst_case_eta(p, nb, a1, draws, adv, rng);
      for (std::size_t i = 0; i < x.numel(); ++i) x[i] = std::clamp(x[i] + eta.best[i], 0.0, 1.0);
      perturbed = eta.zero_loss;
      out.eta_inf = inf_norm(eta.best);
    }
    const NodeId f_in = flow::encode(g, b, g.constant(std::move(x)), nb.tokens, g.constant(nb.proprio));
    const NodeId l_in = flow::flow_loss_node(g, b, f_in, a1, draws);
    out.l_in = g.value(l_in).item();
    if (!image_arm) perturbed = out.l_in;
    out.raw_reward = perturbed - out.l_pi0;
    out.ran_input = true;
    total = g.add(total, g.scale(l_in, adv.lambda_in));
  }

  out.total = g.value(total).item();
  if (backprop) g.backward(total);
  return out;
}

TrainResult train(const sim::Dataset& data, const TrainConfig& cfg, const AdvConfig& adv, const StepCallback& on_step) {
  validate(cfg);
  validate(adv);
  check_dataset(data);
  TrainResult r{flow::init_params(cfg.seed), {}, BanditState(cfg.arms.size()), 0};
  std::vector<unc::PerturbationSpec> arms;
  for (unc::Kind k : cfg.arms) arms.push_back(unc::default_spec(k));
  Adam opt(r.params.all(), AdamConfig{cfg.lr});
  const bool input = uses_input_term(cfg.mode);
  r.log.reserve(static_cast<std::size_t>(cfg.steps));
  std::vector<sim::Sample> batch;
  for (int step = 0; step < cfg.steps; ++step) {
    batch.clear();
    for (std::size_t i : batch_indices(cfg.seed, step, cfg.batch, data.samples.size()))
      batch.push_back(data.samples[i]);
    std::size_t arm = 0;
    if (input) arm = ucb_select(r.bandit, cfg.bandit);
    opt.zero_grad();
    const StepOutcome o =
        compute_step(r.params, batch, cfg.seed, step, cfg.mode, input ? &arms[arm] : nullptr, adv, true);
    if (!opt.step()) ++r.skipped_updates;
    LogRow row{step, o.l_pi0, o.l_out, o.l_in, "-", o.raw_reward, o.delta_inf, o.eta_inf};
    if (input) {
      bandit_update(r.bandit, arm, o.raw_reward, cfg.bandit);
      row.arm = unc::kind_name(cfg.arms[arm]);
    }
    if (on_step) on_step(row);
    r.log.push_back(std::move(row));
  }
  return r;
}

}  // namespace rvla::robust
