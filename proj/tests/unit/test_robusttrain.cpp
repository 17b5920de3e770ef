#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rvla/common/errors.hpp"
#include "rvla/robusttrain/train.hpp"

using namespace rvla;
using namespace rvla::robust;

namespace {

const sim::Dataset& corpus() {
  static const sim::Dataset d = sim::generate_dataset(20, 11);
  return d;
}

std::vector<sim::Sample> pick(std::size_t n, std::uint64_t seed) {
  std::vector<sim::Sample> out;
  for (std::size_t i : batch_indices(seed, 0, static_cast<int>(n), corpus().samples.size()))
    out.push_back(corpus().samples[i]);
  return out;
}

double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

}  // namespace

TEST_CASE("perturbed target identity over random draws") {
  Stream rng(5);
  double worst_u = 0.0, worst_x = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::array<double, 15> a0{}, a1{}, d{}, a1_hat{};
    for (std::size_t j = 0; j < 15; ++j) {
      a0[j] = rng.normal();
      a1[j] = rng.uniform(-1.0, 1.0);
      d[j] = rng.uniform(-0.03, 0.03);
      a1_hat[j] = a1[j] + d[j];
    }
    const double tau = rng.uniform();
    const auto clean = flow::interpolate(a0, a1, tau);
    const auto hat = flow::interpolate(a0, a1_hat, tau);
    for (std::size_t j = 0; j < 15; ++j) {
      // Error in units of the operands' magnitude.
      const double su = 1.0 + std::abs(clean.target_u[j]), sx = 1.0 + std::abs(clean.a_tau[j]);
      worst_u = std::max(worst_u, std::abs(hat.target_u[j] - (clean.target_u[j] - d[j])) / su);
      worst_x = std::max(worst_x, std::abs(hat.a_tau[j] - (clean.a_tau[j] + tau * d[j])) / sx);
    }
  }
  CHECK(worst_u <= 4 * DBL_EPSILON);
  CHECK(worst_x <= 4 * DBL_EPSILON);
}

TEST_CASE("one PGD step on a linear velocity stub follows the hand gradient sign") {
  // v(x) = W x with x = A_tau + tau * delta; loss = mean((v - (u - delta))^2).
  Stream rng(9);
  const std::size_t n = 2, k = 15;
  Tensor w({k, k}), a_tau({n, k}), u({n, k});
  for (double& v : w.data()) v = rng.normal() * 0.3;
  for (double& v : a_tau.data()) v = rng.normal();
  for (double& v : u.data()) v = rng.normal();
  const std::vector<double> tau = {0.3, 0.8};
  auto loss_and_grad = [&](const Tensor& delta) {
    // r = W (a_tau + tau d) - u + d ; dL/dd_j = 2/(nk) sum_i r_i (tau W_ij + [i == j])
    double loss = 0.0;
    Tensor grad({n, k});
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<double> r(k);
      for (std::size_t i = 0; i < k; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < k; ++j) v += (a_tau[s * k + j] + tau[s] * delta[s * k + j]) * w[j * k + i];
        r[i] = v - u[s * k + i] + delta[s * k + i];
        loss += r[i] * r[i];
      }
      for (std::size_t j = 0; j < k; ++j) {
        double g = 0.0;
        for (std::size_t i = 0; i < k; ++i) g += r[i] * (tau[s] * w[j * k + i] + (i == j ? 1.0 : 0.0));
        grad[s * k + j] = 2.0 * g / static_cast<double>(n * k);
      }
    }
    return std::pair{loss / static_cast<double>(n * k), grad};
  };
  // The same stub through the graph engine.
  LossGradFn fn = [&](const Tensor& delta, bool need_grad) {
    Graph g;
    const NodeId d = g.input(delta);
    Tensor tw({n, k});
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t j = 0; j < k; ++j) tw[s * k + j] = tau[s];
    const NodeId x = g.add(g.constant(a_tau), g.mul(g.constant(tw), d));
    const NodeId loss = g.mse(g.matmul(x, g.constant(w)), g.sub(g.constant(u), d));
    LossGrad lg{g.value(loss).item(), {}};
    if (need_grad) lg.grad = g.grad_wrt_input(loss, d);
    return lg;
  };
  std::vector<Tensor> seen;
  LossGradFn recording = [&](const Tensor& x, bool need) {
    seen.push_back(x);
    return fn(x, need);
  };
  Tensor init({n, k});
  for (double& v : init.data()) v = rng.uniform(-0.03, 0.03);
  const double eps = 0.03, alpha = 0.01;
  auto project = [&](Tensor& x) {
    for (double& v : x.data()) v = std::clamp(v, -eps, eps);
  };
  pgd_maximize(init, 1, alpha, project, recording);
  REQUIRE(seen.size() == 3);  // zero, init, one step
  const auto [l0, g0] = loss_and_grad(init);
  CHECK(fn(init, false).loss == doctest::Approx(l0).epsilon(1e-12));
  for (std::size_t i = 0; i < init.numel(); ++i) {
    const double expect = std::clamp(init[i] + alpha * sgn(g0[i]), -eps, eps);
    CHECK(seen[2][i] == expect);
  }
}

TEST_CASE("pgd_maximize keeps the best candidate") {
  // Concave bump peaking at x = 0.02 per entry; ascent overshoots with alpha.
  auto fn = [](const Tensor& x, bool need) {
    LossGrad lg;
    for (double v : x.data()) lg.loss -= (v - 0.02) * (v - 0.02);
    if (need) {
      lg.grad = Tensor(x.shape());
      for (std::size_t i = 0; i < x.numel(); ++i) lg.grad[i] = -2.0 * (x[i] - 0.02);
    }
    return lg;
  };
  auto project = [](Tensor& x) {
    for (double& v : x.data()) v = std::clamp(v, -0.05, 0.05);
  };
  Tensor init({1, 3}, -0.05);
  const PgdResult r = pgd_maximize(init, 3, 0.04, project, fn);
  CHECK(r.best_loss >= r.zero_loss);
  CHECK(r.best_iterate == 2);  // -0.05, -0.01, 0.03, -0.01
  CHECK(r.best[0] == doctest::Approx(0.03));
  const PgdResult none = pgd_maximize(init, 0, 0.04, project, fn);
  CHECK(none.best_iterate == -1);
  CHECK(inf_norm(none.best) == 0.0);
}

TEST_CASE("worst_case_delta contracts") {
  flow::PolicyParams p = flow::init_params(2);
  const auto checksum = flow::params_checksum(p);
  const auto batch = pick(6, 1);

  SUBCASE("zero radius gives zero and the clean loss") {
    AdvConfig cfg;
    cfg.eps_action = 0.0;
    Stream a(4), b(4);
    const auto draws = flow::sample_draws(batch.size(), a);
    const auto r = worst_case_delta(p, batch, draws, cfg, b);
    CHECK(inf_norm(r.best) == 0.0);
    Graph g;
    const auto bd = flow::bind(g, p);
    std::vector<sim::Observation> obs;
    for (const auto& s : batch) obs.push_back(s.obs);
    const double clean =
        g.value(flow::flow_loss_node(g, bd, flow::encode(g, bd, flow::make_batch(obs)), flow::actions_tensor(batch), draws))
            .item();
    CHECK(r.best_loss == doctest::Approx(clean).epsilon(1e-12));
  }

  SUBCASE("ball and dominance on random batches") {
    AdvConfig cfg;
    for (std::uint64_t s = 0; s < 40; ++s) {
      const auto bt = pick(4, 100 + s);
      Stream rng(s);
      const auto draws = flow::sample_draws(bt.size(), rng);
      const auto r = worst_case_delta(p, bt, draws, cfg, rng);
      CHECK(inf_norm(r.best) <= 0.03);
      CHECK(r.best_loss >= r.zero_loss);
    }
  }
  CHECK(flow::params_checksum(p) == checksum);
  for (auto* t : p.all()) {
    bool all_zero = true;
    for (double g : t->grad()) all_zero = all_zero && g == 0.0;
    CHECK(all_zero);
  }
}

TEST_CASE("output_robust_loss identities") {
  flow::PolicyParams p = flow::init_params(3);
  const auto batch = pick(5, 2);
  Stream f(21);
  const double clean = flow::flow_loss(p, batch, f);
  AdvConfig cfg;
  {
    cfg.lambda_out = 0.0;
    Stream s(21);
    CHECK(output_robust_loss(p, batch, cfg, s) == doctest::Approx(clean).epsilon(1e-12));
  }
  {
    cfg.lambda_out = 0.7;
    cfg.eps_action = 0.0;
    Stream s(21);
    CHECK(output_robust_loss(p, batch, cfg, s) == doctest::Approx(1.7 * clean).epsilon(1e-12));
  }
  {
    cfg = AdvConfig{};
    Stream s(21);
    CHECK(output_robust_loss(p, batch, cfg, s) >= 2.0 * clean);
  }
}

TEST_CASE("ucb_select") {
  BanditConfig cfg;
  SUBCASE("empty arm set") { CHECK_THROWS_AS(ucb_select(BanditState(0), cfg), ContractError); }
  SUBCASE("hand evaluated score") {
    CHECK(ucb_score(0.5, 100, 10, 1.0) == doctest::Approx(0.5 + std::sqrt(std::log(100.0) / 10.0)));
    CHECK(std::abs(ucb_score(0.5, 100, 10, 1.0) - 1.1786) < 1e-4);
  }
  SUBCASE("never pulled arm comes first") {
    BanditState s(3);
    for (int i = 0; i < 20; ++i) {
      bandit_update(s, 0, 1.0, cfg);
      bandit_update(s, 2, 1.0, cfg);
    }
    CHECK(ucb_select(s, cfg) == 1);
  }
  SUBCASE("forced phase is round robin") {
    BanditState s(4);
    Stream rng(1);
    for (int t = 0; t < 40; ++t) {
      const auto a = ucb_select(s, cfg);
      CHECK(a == static_cast<std::size_t>(t % 4));
      bandit_update(s, a, rng.normal(), cfg);
    }
  }
  SUBCASE("ties go to the lowest index") {
    BanditState s(3);
    for (std::size_t a = 0; a < 3; ++a)
      for (int i = 0; i < 10; ++i) bandit_update(s, a, 0.0, cfg);
    CHECK(ucb_select(s, cfg) == 0);
  }
}

TEST_CASE("bandit_update") {
  BanditConfig cfg;
  SUBCASE("first update") {
    BanditState s(1);
    const double z = bandit_update(s, 0, 1.0, cfg);
    CHECK(s.ema_mean == doctest::Approx(0.1));
    CHECK(s.ema_var == doctest::Approx(0.9 * 0.9 * 0.1));
    CHECK(z == doctest::Approx(0.9 / (std::sqrt(0.081) + 1e-8)));
    CHECK(s.arms[0].pulls == 1);
    CHECK(s.total == 1);
  }
  SUBCASE("constant stream normalises to zero") {
    BanditState s(1);
    double z = 1.0;
    for (int i = 0; i < 400; ++i) z = bandit_update(s, 0, 2.5, cfg);
    CHECK(std::abs(z) < 1e-6);
    CHECK(s.ema_std() >= 0.0);
  }
  SUBCASE("window eviction and skipped rewards") {
    BanditState s(2);
    for (int i = 0; i < 250; ++i) bandit_update(s, 1, static_cast<double>(i % 7), cfg);
    CHECK(s.arms[1].window.size() == 100);
    CHECK(s.arms[1].pulls == 250);
    bandit_update(s, 1, std::nan(""), cfg);
    bandit_update(s, 0, INFINITY, cfg);
    CHECK(s.skipped == 2);
    CHECK(s.total == 250);
    CHECK(s.arms[0].pulls == 0);
  }
}

TEST_CASE("bandit simulations") {
  BanditConfig cfg;
  SUBCASE("two arms, means 1 and 0") {
    Stream rng(77);
    BanditState s(2);
    int better = 0, counted = 0;
    for (int t = 0; t < 500; ++t) {
      const auto a = ucb_select(s, cfg);
      bandit_update(s, a, (a == 1 ? 1.0 : 0.0) + 0.1 * rng.normal(), cfg);
      if (t >= 20) {
        ++counted;
        better += a == 1;
      }
    }
    CHECK(better >= 0.8 * counted);
  }
  SUBCASE("three gaussian arms over 20 seeds") {
    double share = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Stream rng(derive_seed(seed, {hash_tag("arms3")}));
      BanditState s(3);
      const double means[] = {0.0, 1.0, 0.5};
      int best = 0;
      for (int t = 0; t < 1000; ++t) {
        const auto a = ucb_select(s, cfg);
        bandit_update(s, a, means[a] + 0.1 * rng.normal(), cfg);
        if (t >= 200) best += a == 1;
      }
      share += best / 800.0;
    }
    CHECK(share / 20.0 >= 0.8);
  }
}

TEST_CASE("input_robust_loss") {
  flow::PolicyParams p = flow::init_params(4);
  const auto batch = pick(4, 3);
  AdvConfig cfg;

  SUBCASE("identity arm without attack") {
    cfg.pgd_steps_obs = 0;
    cfg.lambda_in = 0.6;
    for (auto k : {unc::Kind::kDeadPixel, unc::Kind::kImageShift, unc::Kind::kLexical, unc::Kind::kLighting}) {
      Stream a(8), b(8);
      const double clean = flow::flow_loss(p, batch, a);
      const auto r = input_robust_loss(p, batch, unc::at_level(k, 0.0), cfg, b);
      CHECK(r.loss == doctest::Approx(0.6 * clean).epsilon(1e-12));
      CHECK(r.raw_reward == 0.0);
    }
  }
  SUBCASE("eta bound, box and dominance") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      for (auto k : {unc::Kind::kImageGaussianNoise, unc::Kind::kColorJitter, unc::Kind::kDistractors}) {
        Stream rng(s);
        const auto r = input_robust_loss(p, batch, unc::default_spec(k), cfg, rng);
        CHECK(inf_norm(r.eta) <= 8.0 / 255.0 + 1e-15);
        CHECK(r.loss >= r.perturbed_loss);
      }
    }
    std::vector<sim::Observation> obs;
    for (const auto& s : batch) obs.push_back(s.obs);
    const auto ob = flow::make_batch(obs);
    Stream rng(3), d(4);
    const auto draws = flow::sample_draws(batch.size(), d);
    const auto eta = worst_case_eta(p, ob, flow::actions_tensor(batch), draws, cfg, rng);
    for (std::size_t i = 0; i < eta.best.numel(); ++i) {
      const double x = ob.images[i] + eta.best[i];
      CHECK((x >= 0.0 && x <= 1.0));
    }
  }
  SUBCASE("instruction arms carry no eta") {
    Stream rng(2);
    const auto r = input_robust_loss(p, batch, unc::default_spec(unc::Kind::kSyntactic), cfg, rng);
    CHECK(inf_norm(r.eta) == 0.0);
    CHECK(r.loss == doctest::Approx(r.perturbed_loss));
  }
  SUBCASE("output arms are rejected") {
    Stream rng(2);
    CHECK_THROWS_AS(input_robust_loss(p, batch, unc::default_spec(unc::Kind::kActionBias), cfg, rng), ContractError);
    CHECK_THROWS_AS(input_robust_loss(p, batch, unc::default_spec(unc::Kind::kExternalForce), cfg, rng),
                    ContractError);
  }
}

TEST_CASE("ablation algebra on shared draws") {
  flow::PolicyParams p = flow::init_params(6);
  const auto batch = pick(4, 5);
  const AdvConfig adv;
  for (auto k : {unc::Kind::kMotionBlur, unc::Kind::kAdversarial}) {
    const auto arm = unc::default_spec(k);
    const auto base = compute_step(p, batch, 9, 3, Mode::kBaseline, nullptr, adv, false);
    const auto no_in = compute_step(p, batch, 9, 3, Mode::kNoIn, nullptr, adv, false);
    const auto no_out = compute_step(p, batch, 9, 3, Mode::kNoOut, &arm, adv, false);
    const auto full = compute_step(p, batch, 9, 3, Mode::kRobust, &arm, adv, false);
    CHECK(!base.ran_delta);
    CHECK(!base.ran_input);
    CHECK(base.total == base.l_pi0);
    CHECK(full.l_pi0 == base.l_pi0);
    CHECK(full.l_out == no_in.l_out);
    CHECK(full.l_in == no_out.l_in);
    CHECK(full.raw_reward == no_out.raw_reward);
    CHECK(full.total == doctest::Approx(no_in.total + no_out.total - base.l_pi0).epsilon(1e-13));
  }
}

TEST_CASE("config text") {
  TrainConfig c;
  AdvConfig a;
  CHECK(c.arms.size() == 11);
  for (auto k : c.arms) CHECK(unc::is_input_kind(k));
  c.mode = Mode::kNoOut;
  c.seed = 12;
  c.arms = {unc::Kind::kLexical, unc::Kind::kDeadPixel};
  a.eps_obs = 0.02;
  TrainConfig c2;
  AdvConfig a2;
  apply_config_text(format_config(c, a), c2, a2);
  CHECK(format_config(c2, a2) == format_config(c, a));
  CHECK(c2.arms == c.arms);

  TrainConfig c3;
  AdvConfig a3;
  apply_config_text("# comment\n steps = 7 \n\nlambda_out=0.5 # trailing\n", c3, a3);
  CHECK(c3.steps == 7);
  CHECK(a3.lambda_out == 0.5);
  CHECK_THROWS_AS(apply_config_text("nope = 1\n", c3, a3), FormatError);
  CHECK_THROWS_AS(apply_config_text("steps 7\n", c3, a3), FormatError);
  CHECK_THROWS_AS(apply_config_text("lr = fast\n", c3, a3), FormatError);
  CHECK_THROWS_AS(apply_config_text("mode = sometimes\n", c3, a3), ContractError);

  c3.arms = {unc::Kind::kGaussianNoise};
  CHECK_THROWS_AS(validate(c3), ContractError);
  a3.pgd_steps_obs = -1;
  CHECK_THROWS_AS(validate(a3), ContractError);
}

TEST_CASE("train") {
  sim::Dataset small;
  small.samples = pick(24, 4);
  TrainConfig cfg;
  cfg.batch = 4;
  cfg.seed = 5;

  SUBCASE("baseline runs no attacks") {
    cfg.mode = Mode::kBaseline;
    cfg.steps = 5;
    const auto r = train(small, cfg, AdvConfig{});
    REQUIRE(r.log.size() == 5);
    for (const auto& row : r.log) {
      CHECK(row.arm == "-");
      CHECK(row.l_out == 0.0);
      CHECK(row.l_in == 0.0);
      CHECK(row.delta_inf == 0.0);
    }
    CHECK(r.bandit.total == 0);
  }
  SUBCASE("forced exploration before scoring") {
    cfg.mode = Mode::kRobust;
    cfg.steps = 100;
    cfg.arms = {unc::Kind::kDeadPixel, unc::Kind::kLexical, unc::Kind::kImageShift};
    cfg.batch = 2;
    AdvConfig adv;
    adv.pgd_steps_obs = 1;
    const auto r = train(small, cfg, adv);
    for (int t = 0; t < 30; ++t) CHECK(r.log[static_cast<std::size_t>(t)].arm == unc::kind_name(cfg.arms[t % 3]));
    for (const auto& a : r.bandit.arms) CHECK(a.pulls >= 10);
    CHECK(r.bandit.total == 100);
    for (const auto& row : r.log) {
      CHECK(row.delta_inf <= 0.03);
      CHECK(row.eta_inf <= 8.0 / 255.0 + 1e-15);
    }
  }
  SUBCASE("same config twice is bit identical") {
    cfg.mode = Mode::kRobust;
    cfg.steps = 12;
    const auto a = train(small, cfg, AdvConfig{});
    const auto b = train(small, cfg, AdvConfig{});
    CHECK(flow::params_checksum(a.params) == flow::params_checksum(b.params));
    std::ostringstream la, lb;
    write_log(la, a.log);
    write_log(lb, b.log);
    CHECK(la.str() == lb.str());
    cfg.seed = 6;
    const auto c = train(small, cfg, AdvConfig{});
    CHECK(flow::params_checksum(a.params) != flow::params_checksum(c.params));
  }
  SUBCASE("loss goes down on a fixed dataset") {
    cfg.mode = Mode::kBaseline;
    cfg.steps = 300;
    cfg.batch = 8;
    const auto r = train(small, cfg, AdvConfig{});
    double early = 0.0, late = 0.0;
    for (int i = 0; i < 30; ++i) {
      early += r.log[static_cast<std::size_t>(i)].l_pi0;
      late += r.log[r.log.size() - 1 - static_cast<std::size_t>(i)].l_pi0;
    }
    CHECK(late < 0.8 * early);
  }
  SUBCASE("log rows have eight tab separated fields") {
    cfg.mode = Mode::kNoOut;
    cfg.steps = 2;
    const auto r = train(small, cfg, AdvConfig{});
    const std::string line = format_log_row(r.log[1]);
    CHECK(std::count(line.begin(), line.end(), '\t') == 7);
    CHECK(line.rfind("1\t", 0) == 0);
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(train(sim::Dataset{}, cfg, AdvConfig{}), ContractError);
    sim::Dataset bad = small;
    bad.samples[3].obs.tokens[0] = 999;
    CHECK_THROWS_AS(train(bad, cfg, AdvConfig{}), FormatError);
  }
}
