#pragma once

#include <cstdint>
#include <vector>

#include "mmda/params.hpp"

namespace mmda::numerics {

/// Adam state for a fixed parameter set. beta1/beta2 follow the usual
/// 0.9/0.999 defaults; base_lr records the schedule anchor.
struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double base_lr = 1e-3;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  bool initialized = false;
};

/// One bias-corrected Adam update at learning rate `lr`; clears gradients.
void adam_step(const std::vector<ParamTensor*>& params, OptimizerState& state, double lr);

/// base_lr * (1 - iter/max_iter)^power.
double poly_lr(std::int64_t iter, std::int64_t max_iter, double base_lr, double power);

}  // namespace mmda::numerics
