#include "rvla/flowpolicy/policy.hpp"

#include <algorithm>
#include <cmath>

#include "rvla/common/errors.hpp"
#include "rvla/gradcore/checkpoint.hpp"

namespace rvla::flow {

namespace {

constexpr std::size_t kSide = sim::kImageSide;
// Sharpens the soft-argmax; at init the conv logits span only a few tenths.
constexpr double kAttentionGain = 30.0;

// Glorot-uniform weights.
Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Stream& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

NodeId linear(Graph& g, NodeId x, NodeId w, NodeId b) { return g.add_row(g.matmul(x, w), b); }

// Cell centres of the 16x16 conv grid in [-1, 1], x to the right, y up.
const Tensor& grid_coords() {
  static const Tensor coords = [] {
    Tensor t({kGridCells, 2});
    for (std::size_t r = 0; r < kGrid; ++r)
      for (std::size_t c = 0; c < kGrid; ++c) {
        t[(r * kGrid + c) * 2] = (2.0 * static_cast<double>(c) + 1.0) / kGrid - 1.0;
        t[(r * kGrid + c) * 2 + 1] = 1.0 - (2.0 * static_cast<double>(r) + 1.0) / kGrid;
      }
    return t;
  }();
  return coords;
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> PolicyParams::named() {
  return {{"conv_w", &conv_w}, {"proj_w", &proj_w}, {"proj_b", &proj_b},
          {"embed", &embed}, {"gate_w", &gate_w}, {"gate_b", &gate_b},
          {"prop_w", &prop_w}, {"prop_b", &prop_b},
          {"tau_w1", &tau_w1}, {"tau_b1", &tau_b1}, {"tau_w2", &tau_w2}, {"tau_b2", &tau_b2},
          {"trunk_w1", &trunk_w1}, {"trunk_b1", &trunk_b1}, {"trunk_w2", &trunk_w2}, {"trunk_b2", &trunk_b2},
          {"trunk_w3", &trunk_w3}, {"trunk_b3", &trunk_b3},
          {"head_w", &head_w}, {"head_b", &head_b}};
}

std::vector<std::pair<std::string, const Tensor*>> PolicyParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<PolicyParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

std::vector<Tensor*> PolicyParams::all() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->numel();
  return n;
}

void PolicyParams::set_requires_grad(bool on) {
  for (Tensor* t : all()) t->set_requires_grad(on);
}

void PolicyParams::zero_grad() {
  for (Tensor* t : all()) t->zero_grad();
}

PolicyParams init_params(std::uint64_t seed) {
  Stream rng(derive_seed(seed, {hash_tag("init")}));
  const auto vocab = static_cast<std::size_t>(sim::vocab_size());
  PolicyParams p;
  p.conv_w = glorot({kKeypoints, 3, 3, 3}, 27, 9 * kKeypoints, rng);
  p.proj_w = glorot({2 * kKeypointDim, kConvFeatures}, 2 * kKeypointDim, kConvFeatures, rng);
  p.proj_b = Tensor({kConvFeatures});
  p.embed = Tensor({vocab, kEmbedDim});
  for (double& v : p.embed.data()) v = 0.1 * rng.normal();
  p.gate_w = glorot({kEmbedDim, kKeypointDim}, kEmbedDim, kKeypointDim, rng);
  p.gate_b = Tensor({kKeypointDim});
  p.prop_w = glorot({3, kEmbedDim}, 3, kEmbedDim, rng);
  p.prop_b = Tensor({kEmbedDim});
  p.tau_w1 = glorot({1, kTauDim}, 1, kTauDim, rng);
  p.tau_b1 = Tensor({kTauDim});
  p.tau_w2 = glorot({kTauDim, kTauDim}, kTauDim, kTauDim, rng);
  p.tau_b2 = Tensor({kTauDim});
  p.trunk_w1 = glorot({kTrunkIn, kHidden}, kTrunkIn, kHidden, rng);
  p.trunk_b1 = Tensor({kHidden});
  p.trunk_w2 = glorot({kHidden, kHidden}, kHidden, kHidden, rng);
  p.trunk_b2 = Tensor({kHidden});
  p.trunk_w3 = glorot({kHidden, kChunk}, kHidden, kChunk, rng);
  p.trunk_b3 = Tensor({kChunk});
  p.head_w = glorot({kFeatureDim, kChunk * kBins}, kFeatureDim, kBins, rng);
  p.head_b = Tensor({kChunk * kBins});
  p.set_requires_grad(true);
  return p;
}

Bound bind(Graph& g, PolicyParams& p) {
  return {g.parameter(p.conv_w), g.parameter(p.proj_w), g.parameter(p.proj_b),
          g.parameter(p.embed), g.parameter(p.gate_w), g.parameter(p.gate_b),
          g.parameter(p.prop_w), g.parameter(p.prop_b),
          g.parameter(p.tau_w1), g.parameter(p.tau_b1), g.parameter(p.tau_w2), g.parameter(p.tau_b2),
          g.parameter(p.trunk_w1), g.parameter(p.trunk_b1), g.parameter(p.trunk_w2), g.parameter(p.trunk_b2),
          g.parameter(p.trunk_w3), g.parameter(p.trunk_b3),
          g.parameter(p.head_w), g.parameter(p.head_b)};
}

void append_image(const sim::Image& img, std::vector<double>& out) {
  for (int c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < kSide; ++r)
      for (std::size_t col = 0; col < kSide; ++col)
        out.push_back(img.at(static_cast<int>(r), static_cast<int>(col), c) / 255.0);
}

ObsBatch make_batch(std::span<const sim::Observation> obs) {
  if (obs.empty()) throw ContractError("empty observation batch");
  const std::size_t n = obs.size();
  ObsBatch b;
  std::vector<double> pix, prop;
  pix.reserve(n * 3 * kSide * kSide);
  for (const auto& o : obs) {
    append_image(o.image, pix);
    prop.insert(prop.end(), o.proprio.begin(), o.proprio.end());
    b.tokens.insert(b.tokens.end(), o.tokens.begin(), o.tokens.end());
  }
  b.images = Tensor({n, 3, kSide, kSide}, std::move(pix));
  b.proprio = Tensor({n, 3}, std::move(prop));
  return b;
}

NodeId encode(Graph& g, const Bound& b, NodeId images, std::span<const int> tokens, NodeId proprio) {
  const std::size_t n = g.value(images).dim(0);
  const NodeId h = g.conv2d(images, b.conv_w, 2);
  // Spatial soft-argmax: one expected (x, y) per conv channel.
  const NodeId attn = g.softmax_rows(g.scale(g.reshape(h, {n * kKeypoints, kGridCells}), kAttentionGain));
  const NodeId points = g.reshape(g.matmul(attn, g.constant(grid_coords())), {n, kKeypointDim});
  const NodeId words = g.embedding_mean(b.embed, tokens, sim::kTokenSlots);
  // The instruction picks which keypoints matter.
  const NodeId picked = g.mul(points, linear(g, words, b.gate_w, b.gate_b));
  const NodeId both[] = {points, picked};
  const NodeId vis = g.tanh(linear(g, g.concat_cols(both), b.proj_w, b.proj_b));
  const NodeId prop = g.tanh(linear(g, proprio, b.prop_w, b.prop_b));
  const NodeId parts[] = {vis, words, prop};
  return g.concat_cols(parts);
}

NodeId encode(Graph& g, const Bound& b, const ObsBatch& batch) {
  return encode(g, b, g.constant(batch.images), batch.tokens, g.constant(batch.proprio));
}

NodeId velocity(Graph& g, const Bound& b, NodeId features, NodeId a_tau, NodeId tau) {
  NodeId t = g.tanh(linear(g, tau, b.tau_w1, b.tau_b1));
  t = g.tanh(linear(g, t, b.tau_w2, b.tau_b2));
  const NodeId parts[] = {features, t, a_tau};
  NodeId h = g.relu(linear(g, g.concat_cols(parts), b.trunk_w1, b.trunk_b1));
  h = g.relu(linear(g, h, b.trunk_w2, b.trunk_b2));
  return linear(g, h, b.trunk_w3, b.trunk_b3);
}

NodeId discrete_logits(Graph& g, const Bound& b, NodeId features) {
  const std::size_t n = g.value(features).dim(0);
  return g.reshape(linear(g, features, b.head_w, b.head_b), {n * kChunk, static_cast<std::size_t>(kBins)});
}

Tensor encode_value(PolicyParams& p, const ObsBatch& batch) {
  Graph g;
  const Bound b = bind(g, p);
  return g.value(encode(g, b, batch));
}

FlowSample interpolate(std::span<const double> a0, std::span<const double> a1, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ContractError("tau must lie in [0, 1]");
  if (a0.size() != kChunk || a1.size() != kChunk) throw DimensionError("interpolate expects 15-entry chunks");
  FlowSample s;
  s.tau = tau;
  for (std::size_t i = 0; i < kChunk; ++i) {
    s.a0[i] = a0[i];
    s.a1[i] = a1[i];
    s.a_tau[i] = tau * a1[i] + (1.0 - tau) * a0[i];
    s.target_u[i] = a0[i] - a1[i];
  }
  return s;
}

FlowDraws sample_draws(std::size_t n, Stream& rng) {
  FlowDraws d{Tensor({n, kChunk}), Tensor({n, 1})};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kChunk; ++j) d.a0[i * kChunk + j] = rng.normal();
    d.tau[i] = rng.beta_a1(1.5);
  }
  return d;
}

NodeId flow_loss_node(Graph& g, const Bound& b, NodeId features, const Tensor& a1, const FlowDraws& draws,
                      const NodeId* delta) {
  const std::size_t n = a1.dim(0);
  if (draws.a0.dim(0) != n || draws.tau.dim(0) != n) throw DimensionError("flow draws do not match batch");
  Tensor a_tau({n, kChunk}), u({n, kChunk}), tau_wide({n, kChunk});
  for (std::size_t i = 0; i < n; ++i) {
    const double t = draws.tau[i];
    for (std::size_t j = 0; j < kChunk; ++j) {
      const std::size_t k = i * kChunk + j;
      a_tau[k] = t * a1[k] + (1.0 - t) * draws.a0[k];
      u[k] = draws.a0[k] - a1[k];
      tau_wide[k] = t;
    }
  }
  NodeId x = g.constant(std::move(a_tau));
  NodeId target = g.constant(std::move(u));
  if (delta) {
    x = g.add(x, g.mul(g.constant(std::move(tau_wide)), *delta));
    target = g.sub(target, *delta);
  }
  const NodeId v = velocity(g, b, features, x, g.constant(draws.tau));
  return g.mse(v, target);
}

Tensor actions_tensor(std::span<const sim::Sample> samples) {
  Tensor t({samples.size(), kChunk});
  for (std::size_t i = 0; i < samples.size(); ++i)
    std::copy(samples[i].actions.begin(), samples[i].actions.end(), t.data().begin() + static_cast<std::ptrdiff_t>(i * kChunk));
  return t;
}

namespace {
std::vector<sim::Observation> observations(std::span<const sim::Sample> samples) {
  std::vector<sim::Observation> obs;
  obs.reserve(samples.size());
  for (const auto& s : samples) obs.push_back(s.obs);
  return obs;
}
}  // namespace

double flow_loss(PolicyParams& p, std::span<const sim::Sample> batch, Stream& rng) {
  if (batch.empty()) throw ContractError("flow_loss needs a non-empty batch");
  Graph g;
  const Bound b = bind(g, p);
  const NodeId feats = encode(g, b, make_batch(observations(batch)));
  const FlowDraws draws = sample_draws(batch.size(), rng);
  return g.value(flow_loss_node(g, b, feats, actions_tensor(batch), draws)).item();
}

std::array<double, kChunk> euler_integrate(std::array<double, kChunk> a, int n_steps, const VelocityFn& v) {
  if (n_steps < 1) throw ContractError("n_steps must be at least 1");
  const double dt = 1.0 / n_steps;
  for (int k = 0; k < n_steps; ++k) {
    const auto vel = v(a, static_cast<double>(k) / n_steps);
    for (std::size_t i = 0; i < kChunk; ++i) a[i] -= dt * vel[i];
  }
  return a;
}

sim::ActionChunk sample_actions(PolicyParams& p, const sim::Observation& obs, int n_steps, Stream& rng) {
  Graph g;
  const Bound b = bind(g, p);
  const NodeId feats = g.constant(g.value(encode(g, b, make_batch(std::span(&obs, 1)))));
  std::array<double, kChunk> a0{};
  for (double& x : a0) x = rng.normal();
  const auto a = euler_integrate(a0, n_steps, [&](const std::array<double, kChunk>& at, double tau) {
    Graph step;
    const Bound sb = bind(step, p);
    const NodeId f = step.constant(g.value(feats));
    const NodeId x = step.constant(Tensor({1, kChunk}, std::vector<double>(at.begin(), at.end())));
    const Tensor& v = step.value(velocity(step, sb, f, x, step.constant(Tensor({1, 1}, std::vector<double>{tau}))));
    std::array<double, kChunk> out{};
    std::copy(v.data().begin(), v.data().end(), out.begin());
    return out;
  });
  sim::ActionChunk chunk{};
  for (std::size_t i = 0; i < kChunk; ++i) chunk[i] = std::clamp(a[i], -1.0, 1.0);
  return chunk;
}

int discretize_value(double a) {
  const int bin = static_cast<int>(std::floor((a + 1.0) / 2.0 * kBins));
  return std::clamp(bin, 0, kBins - 1);
}

BinGrid discretize(const sim::ActionChunk& chunk) {
  BinGrid g{};
  for (std::size_t i = 0; i < kChunk; ++i) g[i] = discretize_value(chunk[i]);
  return g;
}

double bin_center(int bin) { return -1.0 + (bin + 0.5) * 2.0 / kBins; }

NodeId token_loss_node(Graph& g, const Bound& b, NodeId features, const Tensor& a1, const Tensor* delta) {
  constexpr double kWidth = 2.0 / kBins;
  if (delta && delta->numel() != a1.numel()) throw DimensionError("delta does not match the action batch");
  std::vector<int> targets(a1.numel());
  for (std::size_t i = 0; i < a1.numel(); ++i) {
    double a = a1[i];
    if (delta) {
      if (!(std::abs((*delta)[i]) <= kWidth)) throw ContractError("delta exceeds one bin width");
      a += (*delta)[i];
    }
    targets[i] = discretize_value(a);
  }
  return g.softmax_cross_entropy(discrete_logits(g, b, features), targets);
}

double token_loss(PolicyParams& p, std::span<const sim::Sample> batch, const Tensor* delta) {
  if (batch.empty()) throw ContractError("token_loss needs a non-empty batch");
  Graph g;
  const Bound b = bind(g, p);
  const NodeId feats = encode(g, b, make_batch(observations(batch)));
  return g.value(token_loss_node(g, b, feats, actions_tensor(batch), delta)).item();
}

sim::ActionChunk sample_tokens(PolicyParams& p, const sim::Observation& obs) {
  Graph g;
  const Bound b = bind(g, p);
  const Tensor& logits = g.value(discrete_logits(g, b, encode(g, b, make_batch(std::span(&obs, 1)))));
  sim::ActionChunk chunk{};
  for (std::size_t i = 0; i < kChunk; ++i) {
    const auto row = logits.data().subspan(i * kBins, kBins);
    chunk[i] = bin_center(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return chunk;
}

void save_params(const std::filesystem::path& stem, const PolicyParams& p, Head head,
                 const std::map<std::string, std::string>& extra) {
  Checkpoint ck;
  ck.meta = extra;
  ck.meta["head"] = head == Head::kFlow ? "flow" : "token";
  ck.meta["H"] = std::to_string(sim::kHorizon);
  ck.meta["bins"] = std::to_string(kBins);
  ck.meta["vocab"] = std::to_string(sim::vocab_size());
  for (const auto& [name, t] : p.named()) ck.tensors.emplace_back(name, *t);
  save_checkpoint(stem, ck);
}

PolicyParams load_params(const std::filesystem::path& stem, Head* head) {
  const Checkpoint ck = load_checkpoint(stem);
  auto meta = [&](const char* key) {
    const auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw FormatError(std::string("checkpoint metadata lacks ") + key);
    return it->second;
  };
  if (meta("H") != std::to_string(sim::kHorizon) || meta("bins") != std::to_string(kBins) ||
      meta("vocab") != std::to_string(sim::vocab_size()))
    throw FormatError("checkpoint was written for a different architecture");
  const std::string h = meta("head");
  if (h != "flow" && h != "token") throw FormatError("unknown head type '" + h + "'");
  if (head) *head = h == "flow" ? Head::kFlow : Head::kToken;
  PolicyParams p = init_params(0);
  for (auto& [name, t] : p.named()) {
    const Tensor& src = ck.at(name);
    if (src.shape() != t->shape())
      throw FormatError("tensor " + name + " has shape " + shape_to_string(src.shape()) + ", expected " +
                        shape_to_string(t->shape()));
    std::copy(src.data().begin(), src.data().end(), t->data().begin());
  }
  return p;
}

std::uint64_t params_checksum(const PolicyParams& p) {
  std::vector<std::pair<std::string, Tensor>> v;
  for (const auto& [name, t] : p.named()) v.emplace_back(name, *t);
  return checksum(v);
}

std::vector<GradCheckResult> check_flow_loss(std::uint64_t seed, double tolerance, std::size_t probes) {
  PolicyParams p = init_params(seed);
  const sim::Dataset d = sim::generate_dataset(2, seed);
  const std::vector<sim::Sample> batch(d.samples.begin(), d.samples.begin() + std::min<std::ptrdiff_t>(4, d.samples.size()));
  std::vector<sim::Observation> obs;
  for (const auto& s : batch) obs.push_back(s.obs);
  const ObsBatch ob = make_batch(obs);
  const Tensor a1 = actions_tensor(batch);
  Stream draw_rng(derive_seed(seed, {hash_tag("draws")}));
  const FlowDraws draws = sample_draws(batch.size(), draw_rng);
  auto loss = [&](bool backprop) {
    Graph g;
    const Bound b = bind(g, p);
    const NodeId l = flow_loss_node(g, b, encode(g, b, ob), a1, draws);
    if (backprop) g.backward(l);
    return g.value(l).item();
  };
  p.zero_grad();
  loss(true);

  Stream probe(derive_seed(seed, {hash_tag("probe")}));
  std::vector<GradCheckResult> out;
  for (auto& [name, t] : p.named()) {
    if (name.rfind("head", 0) == 0) continue;  // discrete head only
    double num = 0.0, den_a = 0.0, den_n = 0.0;
    for (std::size_t k = 0; k < probes; ++k) {
      const auto i = static_cast<std::size_t>(probe.uniform_int(0, static_cast<int>(t->numel()) - 1));
      const double keep = (*t)[i], analytic = t->grad()[i];
      (*t)[i] = keep + 1e-6;
      const double up = loss(false);
      (*t)[i] = keep - 1e-6;
      const double down = loss(false);
      (*t)[i] = keep;
      const double fd = (up - down) / 2e-6;
      num += (fd - analytic) * (fd - analytic);
      den_a += analytic * analytic;
      den_n += fd * fd;
    }
    const double err = std::sqrt(num) / std::max({std::sqrt(den_a), std::sqrt(den_n), 1e-12});
    out.push_back({"flow_loss/" + name, err, err < tolerance});
  }
  return out;
}

}  // namespace rvla::flow
