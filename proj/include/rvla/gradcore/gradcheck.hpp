#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rvla/gradcore/graph.hpp"

namespace rvla {

// Builds a scalar loss from graph-owned input leaves.
using LossBuilder = std::function<NodeId(Graph&, std::span<const NodeId>)>;

struct GradCheckResult {
  std::string name;
  double rel_error = 0.0;
  bool passed = false;
};

// Central-difference gradient of the built loss with respect to every
// entry of every input. Only forward values are used.
std::vector<Tensor> numeric_gradients(const LossBuilder& build, const std::vector<Tensor>& inputs,
                                      double step = 1e-6);
// Reverse-mode gradients from one backward() call.
std::vector<Tensor> analytic_gradients(const LossBuilder& build, const std::vector<Tensor>& inputs);

// max over inputs of ||analytic - numeric|| / max(||analytic||, ||numeric||).
double gradient_rel_error(const LossBuilder& build, const std::vector<Tensor>& inputs,
                          double step = 1e-6);

// Finite-difference checks for every differentiable primitive of Graph, on
// random inputs of scale 0.1 drawn from the given seed.
std::vector<GradCheckResult> check_primitives(std::uint64_t seed, double tolerance = 1e-5);

}  // namespace rvla
