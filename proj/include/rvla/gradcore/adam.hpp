#pragma once

#include <cstdint>
#include <vector>

#include "rvla/gradcore/tensor.hpp"

namespace rvla {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::int64_t steps = 0;
  // Steps rejected because some gradient entry was NaN or infinite.
  std::int64_t skipped = 0;
};

/// Bias-corrected Adam over a fixed list of parameter tensors.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig config = {});

  // Applies one update from the parameters' gradient buffers. Returns false
  // (and leaves every parameter untouched) if any gradient is non-finite.
  bool step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

 private:
  std::vector<Tensor*> params_;
  AdamConfig config_;
  AdamState state_;
};

}  // namespace rvla
