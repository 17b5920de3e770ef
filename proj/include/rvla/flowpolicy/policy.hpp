#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rvla/common/random.hpp"
#include "rvla/gradcore/gradcheck.hpp"
#include "rvla/gradcore/graph.hpp"
#include "rvla/manipsim/dataset.hpp"

namespace rvla::flow {

inline constexpr std::size_t kFeatureDim = 96;
inline constexpr std::size_t kConvFeatures = 64;
inline constexpr std::size_t kGrid = 16;  // conv output side
inline constexpr std::size_t kGridCells = kGrid * kGrid;
inline constexpr std::size_t kKeypoints = 16;  // conv channels
inline constexpr std::size_t kKeypointDim = 2 * kKeypoints;
inline constexpr std::size_t kEmbedDim = 16;
inline constexpr std::size_t kTauDim = 16;
inline constexpr std::size_t kHidden = 128;
inline constexpr std::size_t kChunk = sim::kChunkSize;
inline constexpr std::size_t kTrunkIn = kFeatureDim + kTauDim + kChunk;
inline constexpr int kBins = 64;
inline constexpr int kDefaultOdeSteps = 10;

/// Weights of the encoder, the velocity trunk and the discrete head.
struct PolicyParams {
  // The conv has no bias: the soft-argmax after it is shift invariant.
  Tensor conv_w, proj_w, proj_b;
  Tensor embed, gate_w, gate_b;
  Tensor prop_w, prop_b;
  Tensor tau_w1, tau_b1, tau_w2, tau_b2;
  Tensor trunk_w1, trunk_b1, trunk_w2, trunk_b2, trunk_w3, trunk_b3;
  Tensor head_w, head_b;

  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::vector<Tensor*> all();
  std::size_t parameter_count() const;
  void set_requires_grad(bool on);
  void zero_grad();
};

PolicyParams init_params(std::uint64_t seed);

// Graph nodes for one PolicyParams inside one Graph.
struct Bound {
  NodeId conv_w, proj_w, proj_b;
  NodeId embed, gate_w, gate_b;
  NodeId prop_w, prop_b;
  NodeId tau_w1, tau_b1, tau_w2, tau_b2;
  NodeId trunk_w1, trunk_b1, trunk_w2, trunk_b2, trunk_w3, trunk_b3;
  NodeId head_w, head_b;
};

Bound bind(Graph& g, PolicyParams& p);

/// Observations in network layout: images N x 3 x 32 x 32 scaled to [0,1].
struct ObsBatch {
  Tensor images;
  std::vector<int> tokens;  // N x 12
  Tensor proprio;           // N x 3
  std::size_t size() const { return images.rank() == 0 ? 0 : images.dim(0); }
};

ObsBatch make_batch(std::span<const sim::Observation> obs);
// Normalised CHW planes of one image, appended to out.
void append_image(const sim::Image& img, std::vector<double>& out);

NodeId encode(Graph& g, const Bound& b, NodeId images, std::span<const int> tokens, NodeId proprio);
NodeId encode(Graph& g, const Bound& b, const ObsBatch& batch);
// features N x 96, a_tau N x 15, tau N x 1 -> N x 15
NodeId velocity(Graph& g, const Bound& b, NodeId features, NodeId a_tau, NodeId tau);
// N x 96 -> (N * 15) x 64
NodeId discrete_logits(Graph& g, const Bound& b, NodeId features);

Tensor encode_value(PolicyParams& p, const ObsBatch& batch);

struct FlowSample {
  std::array<double, kChunk> a0{}, a1{}, a_tau{}, target_u{};
  double tau = 0.0;
};

FlowSample interpolate(std::span<const double> a0, std::span<const double> a1, double tau);

// Per-element noise and times shared by every pass over one batch.
struct FlowDraws {
  Tensor a0;   // N x 15, standard normal
  Tensor tau;  // N x 1, Beta(1.5, 1)
};

FlowDraws sample_draws(std::size_t n, Stream& rng);

// Flow-matching mean squared error. With delta (N x 15), the data action is
// shifted to A1 + delta: the input becomes A_tau + tau * delta and the
// target u - delta.
NodeId flow_loss_node(Graph& g, const Bound& b, NodeId features, const Tensor& a1, const FlowDraws& draws,
                      const NodeId* delta = nullptr);

Tensor actions_tensor(std::span<const sim::Sample> samples);

double flow_loss(PolicyParams& p, std::span<const sim::Sample> batch, Stream& rng);

using VelocityFn = std::function<std::array<double, kChunk>(const std::array<double, kChunk>&, double)>;

// Euler from tau = 0 to 1 with A <- A - dtau * v(A, tau), no clamping.
std::array<double, kChunk> euler_integrate(std::array<double, kChunk> a, int n_steps, const VelocityFn& v);

sim::ActionChunk sample_actions(PolicyParams& p, const sim::Observation& obs, int n_steps, Stream& rng);

using BinGrid = std::array<int, kChunk>;
int discretize_value(double a);
BinGrid discretize(const sim::ActionChunk& chunk);
double bin_center(int bin);

// Cross-entropy of the discrete head against discretize(A1 + delta).
// |delta| must not exceed one bin width (2/64) in any entry.
double token_loss(PolicyParams& p, std::span<const sim::Sample> batch, const Tensor* delta = nullptr);
NodeId token_loss_node(Graph& g, const Bound& b, NodeId features, const Tensor& a1, const Tensor* delta);
sim::ActionChunk sample_tokens(PolicyParams& p, const sim::Observation& obs);

enum class Head { kFlow, kToken };

void save_params(const std::filesystem::path& stem, const PolicyParams& p, Head head,
                 const std::map<std::string, std::string>& extra = {});
PolicyParams load_params(const std::filesystem::path& stem, Head* head = nullptr);
std::uint64_t params_checksum(const PolicyParams& p);

// Central differences of the full flow loss against backward(), one result
// per parameter group, on `probes` random entries of each.
std::vector<GradCheckResult> check_flow_loss(std::uint64_t seed, double tolerance = 1e-5, std::size_t probes = 12);

}  // namespace rvla::flow
