#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "docgen/nn/graph.hpp"

namespace docgen::nn {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  // Decoupled: decay applied directly to weights (AdamW). When false the
  // decay term is folded into the gradient instead.
  bool decoupled_decay = true;
};

// Adam with bias correction. Moment slots are bound to parameters at
// construction; stepping an empty or foreign set is an error.
class Adam {
 public:
  Adam(AdamConfig config, std::span<Parameter* const> params);

  // Applies one update from the gradients currently held by the parameters.
  // Non-trainable parameters are skipped.
  void step();

  std::int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Slot {
    Parameter* param;
    Tensor m;
    Tensor v;
  };
  AdamConfig config_;
  std::vector<Slot> slots_;
  std::int64_t t_ = 0;
};

}  // namespace docgen::nn
