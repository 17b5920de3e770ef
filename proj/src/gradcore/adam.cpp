#include "rvla/gradcore/adam.hpp"

#include <cmath>

namespace rvla {

Adam::Adam(std::vector<Tensor*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (Tensor* p : params_) {
    state_.first.emplace_back(p->numel(), 0.0);
    state_.second.emplace_back(p->numel(), 0.0);
  }
}

bool Adam::step() {
  for (Tensor* p : params_) {
    if (!p->has_grad()) continue;
    for (double g : p->grad())
      if (!std::isfinite(g)) {
        ++state_.skipped;
        return false;
      }
  }
  ++state_.steps;
  const double t = static_cast<double>(state_.steps);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = *params_[k];
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto& m = state_.first[k];
    auto& v = state_.second[k];
    auto w = p.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      w[i] -= config_.lr * mh / (std::sqrt(vh) + config_.eps);
    }
  }
  return true;
}

void Adam::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

}  // namespace rvla
