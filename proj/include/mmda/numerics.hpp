#pragma once

#include <functional>
#include <vector>

#include "mmda/matrix.hpp"
#include "mmda/optim.hpp"
#include "mmda/params.hpp"
#include "mmda/tape.hpp"

namespace mmda::numerics {

/// Plain (non-tape) matrix product with shape/finiteness checks.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Row-wise softmax of m/scale with per-row max subtraction.
Matrix softmax_rows(const Matrix& m, double scale);

/// Zero-mean unit-variance normalization over a feature vector, followed by
/// a learnable per-feature scale/shift.
std::vector<double> feature_norm(const std::vector<double>& v, const std::vector<double>& gamma,
                                 const std::vector<double>& beta, double eps = 1e-5);

/// Central-difference check of the analytic gradients produced by
/// `loss_and_grad`, which must rebuild its graph, run backward, and leave
/// gradients accumulated in `params` every time it is called. Returns the
/// max over parameter entries of |analytic - fd| / max(|analytic|, |fd|, floor).
double grad_check(const std::function<double()>& loss_and_grad,
                  const std::vector<ParamTensor*>& params, double eps, double floor = 1e-6);

}  // namespace mmda::numerics
