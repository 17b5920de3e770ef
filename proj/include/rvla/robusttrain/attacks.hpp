#pragma once

#include <functional>
#include <span>

#include "rvla/common/random.hpp"
#include "rvla/flowpolicy/policy.hpp"
#include "rvla/robusttrain/config.hpp"
#include "rvla/uncertainty/spec.hpp"

namespace rvla::robust {

struct LossGrad {
  double loss = 0.0;
  Tensor grad;  // empty when not requested
};

using LossGradFn = std::function<LossGrad(const Tensor& x, bool need_grad)>;
using ProjectFn = std::function<void(Tensor& x)>;

struct PgdResult {
  Tensor best;
  double best_loss = 0.0;
  double zero_loss = 0.0;
  int best_iterate = -1;  // -1: the zero perturbation won
};

// Signed-gradient ascent from init: x <- project(x + alpha * sign(grad)).
// Candidates are zero, init and every iterate; the highest loss wins, ties
// going to the earlier candidate. steps == 0 returns zero.
PgdResult pgd_maximize(const Tensor& init, int steps, double alpha, const ProjectFn& project,
                       const LossGradFn& fn);

double inf_norm(const Tensor& t);

// Worst-case action offset for fixed (detached) features.
PgdResult worst_case_delta(flow::PolicyParams& p, const Tensor& features, const Tensor& a1,
                           const flow::FlowDraws& draws, const AdvConfig& cfg, Stream& rng);
PgdResult worst_case_delta(flow::PolicyParams& p, std::span<const sim::Sample> batch, const flow::FlowDraws& draws,
                           const AdvConfig& cfg, Stream& rng);

// L_pi0 + lambda_out * adversarial loss on the same draws.
double output_robust_loss(flow::PolicyParams& p, std::span<const sim::Sample> batch, const AdvConfig& cfg,
                          Stream& rng);

// Additive image offset with |eta| <= eps_obs and images + eta inside [0, 1].
PgdResult worst_case_eta(flow::PolicyParams& p, const flow::ObsBatch& batch, const Tensor& a1,
                         const flow::FlowDraws& draws, const AdvConfig& cfg, Stream& rng);

// Applies one input arm to a recorded observation.
sim::Observation apply_arm(const sim::Observation& obs, const unc::PerturbationSpec& arm, Stream& rng);

struct InputRobustResult {
  double loss = 0.0;  // lambda_in * flow loss on the perturbed (+eta) input
  double raw_reward = 0.0;
  double clean_loss = 0.0;
  double perturbed_loss = 0.0;  // before eta
  Tensor eta;
};

InputRobustResult input_robust_loss(flow::PolicyParams& p, std::span<const sim::Sample> batch,
                                    const unc::PerturbationSpec& arm, const AdvConfig& cfg, Stream& rng);

}  // namespace rvla::robust
