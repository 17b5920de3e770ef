#include "rvla/robusttrain/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "rvla/common/errors.hpp"
#include "rvla/uncertainty/perturb.hpp"

namespace rvla::robust {

namespace {

std::vector<sim::Observation> observations(std::span<const sim::Sample> batch) {
  std::vector<sim::Observation> obs;
  obs.reserve(batch.size());
  for (const auto& s : batch) obs.push_back(s.obs);
  return obs;
}

Tensor uniform_like(const Shape& shape, double eps, Stream& rng) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform(-eps, eps);
  return t;
}

}  // namespace

double inf_norm(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

PgdResult pgd_maximize(const Tensor& init, int steps, double alpha, const ProjectFn& project, const LossGradFn& fn) {
  if (steps < 0) throw ContractError("pgd steps must be >= 0");
  PgdResult r;
  r.best = Tensor(init.shape());
  r.zero_loss = fn(r.best, false).loss;
  r.best_loss = r.zero_loss;
  if (steps == 0) return r;
  Tensor x = init;
  project(x);
  for (int k = 0; k <= steps; ++k) {
    const bool last = k == steps;
    LossGrad lg = fn(x, !last);
    if (lg.loss > r.best_loss) {
      r.best_loss = lg.loss;
      r.best = x;
      r.best_iterate = k;
    }
    if (last) break;
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double g = lg.grad[i];
      x[i] += alpha * static_cast<double>((g > 0.0) - (g < 0.0));
    }
    project(x);
  }
  return r;
}

PgdResult worst_case_delta(flow::PolicyParams& p, const Tensor& features, const Tensor& a1,
                           const flow::FlowDraws& draws, const AdvConfig& cfg, Stream& rng) {
  validate(cfg);
  const double eps = cfg.eps_action;
  const int steps = eps > 0.0 ? cfg.pgd_steps_action : 0;
  auto fn = [&](const Tensor& delta, bool need_grad) {
    Graph g;
    const flow::Bound b = flow::bind(g, p);
    const NodeId d = g.input(delta);
    const NodeId loss = flow::flow_loss_node(g, b, g.constant(features), a1, draws, &d);
    LossGrad lg{g.value(loss).item(), {}};
    if (need_grad) lg.grad = g.grad_wrt_input(loss, d);
    return lg;
  };
  auto project = [eps](Tensor& x) {
    for (double& v : x.data()) v = std::clamp(v, -eps, eps);
  };
  const Tensor init = steps > 0 ? uniform_like(a1.shape(), eps, rng) : Tensor(a1.shape());
  return pgd_maximize(init, steps, cfg.pgd_alpha_action, project, fn);
}

PgdResult worst_case_delta(flow::PolicyParams& p, std::span<const sim::Sample> batch, const flow::FlowDraws& draws,
                           const AdvConfig& cfg, Stream& rng) {
  const Tensor feats = flow::encode_value(p, flow::make_batch(observations(batch)));
  return worst_case_delta(p, feats, flow::actions_tensor(batch), draws, cfg, rng);
}

double output_robust_loss(flow::PolicyParams& p, std::span<const sim::Sample> batch, const AdvConfig& cfg,
                          Stream& rng) {
  const flow::FlowDraws draws = flow::sample_draws(batch.size(), rng);
  const PgdResult r = worst_case_delta(p, batch, draws, cfg, rng);
  return r.zero_loss + cfg.lambda_out * r.best_loss;
}

PgdResult worst_case_eta(flow::PolicyParams& p, const flow::ObsBatch& batch, const Tensor& a1,
                         const flow::FlowDraws& draws, const AdvConfig& cfg, Stream& rng) {
  validate(cfg);
  const double eps = cfg.eps_obs;
  const int steps = eps > 0.0 ? cfg.pgd_steps_obs : 0;
  const Tensor& img = batch.images;
  auto fn = [&](const Tensor& eta, bool need_grad) {
    Tensor x = img;
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = std::clamp(x[i] + eta[i], 0.0, 1.0);
    Graph g;
    const flow::Bound b = flow::bind(g, p);
    const NodeId xi = g.input(std::move(x));
    const NodeId feats = flow::encode(g, b, xi, batch.tokens, g.constant(batch.proprio));
    const NodeId loss = flow::flow_loss_node(g, b, feats, a1, draws);
    LossGrad lg{g.value(loss).item(), {}};
    // Inside the box the clip is the identity, so d/d(eta) = d/dx.
    if (need_grad) lg.grad = g.grad_wrt_input(loss, xi);
    return lg;
  };
  auto project = [&](Tensor& eta) {
    for (std::size_t i = 0; i < eta.numel(); ++i) {
      const double e = std::clamp(eta[i], -eps, eps);
      eta[i] = std::clamp(img[i] + e, 0.0, 1.0) - img[i];
    }
  };
  const Tensor init = steps > 0 ? uniform_like(img.shape(), eps, rng) : Tensor(img.shape());
  return pgd_maximize(init, steps, cfg.pgd_alpha_obs, project, fn);
}

sim::Observation apply_arm(const sim::Observation& obs, const unc::PerturbationSpec& arm, Stream& rng) {
  using unc::Kind;
  if (!unc::is_input_kind(arm.kind))
    throw ContractError(std::string("arm ") + unc::kind_name(arm.kind) + " is not an input perturbation");
  sim::Observation out = obs;
  if (arm.kind == Kind::kLighting) {
    const auto lp = unc::lighting_params(arm);
    const auto light = unc::blend_lighting(unc::sample_lighting({}, 0, rng, lp), arm.param("mix"));
    unc::relight_image(out.image, light);
  } else if (arm.kind == Kind::kDistractors) {
    unc::paint_distractors(out.image, out.tokens, rng, static_cast<int>(std::lround(arm.param("count"))));
  } else if (arm.modality() == unc::Modality::kInstruction) {
    out.tokens = unc::perturb_instruction(out.tokens, arm, rng);
  } else {
    out.image = unc::perturb_image(out.image, arm, rng);
  }
  return out;
}

InputRobustResult input_robust_loss(flow::PolicyParams& p, std::span<const sim::Sample> batch,
                                    const unc::PerturbationSpec& arm, const AdvConfig& cfg, Stream& rng) {
  if (!unc::is_input_kind(arm.kind))
    throw ContractError(std::string("arm ") + unc::kind_name(arm.kind) + " is not an input perturbation");
  if (batch.empty()) throw ContractError("input_robust_loss needs a non-empty batch");
  const flow::FlowDraws draws = flow::sample_draws(batch.size(), rng);
  const Tensor a1 = flow::actions_tensor(batch);
  std::vector<sim::Observation> noisy;
  noisy.reserve(batch.size());
  for (const auto& s : batch) noisy.push_back(apply_arm(s.obs, arm, rng));
  const flow::ObsBatch clean_b = flow::make_batch(observations(batch));
  const flow::ObsBatch noisy_b = flow::make_batch(noisy);

  InputRobustResult r;
  {
    Graph g;
    const flow::Bound b = flow::bind(g, p);
    r.clean_loss = g.value(flow::flow_loss_node(g, b, flow::encode(g, b, clean_b), a1, draws)).item();
  }
  double adv_loss;
  if (unc::is_image_kind(arm.kind)) {
    PgdResult eta = worst_case_eta(p, noisy_b, a1, draws, cfg, rng);
    r.perturbed_loss = eta.zero_loss;
    adv_loss = eta.best_loss;
    r.eta = std::move(eta.best);
  } else {
    Graph g;
    const flow::Bound b = flow::bind(g, p);
    r.perturbed_loss = g.value(flow::flow_loss_node(g, b, flow::encode(g, b, noisy_b), a1, draws)).item();
    adv_loss = r.perturbed_loss;
    r.eta = Tensor(noisy_b.images.shape());
  }
  r.loss = cfg.lambda_in * adv_loss;
  r.raw_reward = r.perturbed_loss - r.clean_loss;
  return r;
}

}  // namespace rvla::robust
