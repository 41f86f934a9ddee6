#include "docgen/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace docgen::nn {

Adam::Adam(AdamConfig config, std::span<Parameter* const> params) : config_(config) {
  slots_.reserve(params.size());
  for (Parameter* p : params) {
    slots_.push_back(Slot{p, Tensor(p->value.shape()), Tensor(p->value.shape())});
  }
}

void Adam::step() {
  if (slots_.empty()) throw std::logic_error("Adam::step: no parameters registered");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (Slot& s : slots_) {
    if (!s.param->trainable) continue;
    Tensor& theta = s.param->value;
    const Tensor& grad = s.param->grad;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double prev = theta[i];
      double g = grad[i];
      if (!config_.decoupled_decay) g += config_.weight_decay * prev;
      s.m[i] = config_.beta1 * s.m[i] + (1.0 - config_.beta1) * g;
      s.v[i] = config_.beta2 * s.v[i] + (1.0 - config_.beta2) * g * g;
      double m_hat = s.m[i] / bc1;
      double v_hat = s.v[i] / bc2;
      theta[i] = prev - config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
      if (config_.decoupled_decay) theta[i] -= config_.lr * config_.weight_decay * prev;
    }
    theta.check_finite("adam step");
  }
}

}  // namespace docgen::nn
