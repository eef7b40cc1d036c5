#include "mmda/optim.hpp"

#include <cmath>

#include "mmda/errors.hpp"

namespace mmda::numerics {

void adam_step(const std::vector<ParamTensor*>& params, OptimizerState& state, double lr) {
  if (!state.initialized) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i]->value.size(), 0.0);
      state.v[i].assign(params[i]->value.size(), 0.0);
    }
    state.initialized = true;
  }
  if (state.m.size() != params.size()) throw StateError("adam_step: parameter set changed");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    if (p.grad.size() != p.value.size() || state.m[i].size() != p.value.size())
      throw StateError("adam_step: gradient missing or shape mismatch for " + p.name);
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
    p.zero_grad();
  }
}

double poly_lr(std::int64_t iter, std::int64_t max_iter, double base_lr, double power) {
  if (max_iter <= 0) throw ArgumentError("poly_lr: max_iter must be positive");
  if (iter < 0 || iter > max_iter) throw ArgumentError("poly_lr: iter outside [0, max_iter]");
  const double frac = 1.0 - static_cast<double>(iter) / static_cast<double>(max_iter);
  return base_lr * std::pow(frac, power);
}

}  // namespace mmda::numerics
