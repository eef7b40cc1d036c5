#pragma once

#include <string>
#include <vector>

#include "mmda/matrix.hpp"
#include "mmda/rng.hpp"

namespace mmda::numerics {

/// Learnable tensor: a value and an accumulated gradient of the same shape.
struct ParamTensor {
  std::string name;
  idx rows = 0;
  idx cols = 0;
  std::vector<double> value;
  std::vector<double> grad;

  ParamTensor() = default;
  ParamTensor(std::string n, idx r, idx c)
      : name(std::move(n)),
        rows(r),
        cols(c),
        value(static_cast<std::size_t>(r * c), 0.0),
        grad(static_cast<std::size_t>(r * c), 0.0) {}

  idx size() const { return rows * cols; }

  void zero_grad() { grad.assign(grad.size(), 0.0); }

  void init_normal(Rng& rng, double stddev) {
    for (double& v : value) v = stddev * rng.normal();
  }

  void init_constant(double v) { value.assign(value.size(), v); }
};

inline void zero_grads(const std::vector<ParamTensor*>& params) {
  for (ParamTensor* p : params) p->zero_grad();
}

}  // namespace mmda::numerics
