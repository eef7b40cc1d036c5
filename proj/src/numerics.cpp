#include "mmda/numerics.hpp"

#include <cmath>

#include "mmda/kernels.hpp"

namespace mmda::numerics {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  if (!a.all_finite() || !b.all_finite()) throw NumericError("matmul: non-finite input");
  Matrix c(a.rows(), b.cols());
  kernels::gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Matrix softmax_rows(const Matrix& m, double scale) {
  if (!(scale > 0.0)) throw ArgumentError("softmax_rows: scale must be positive");
  Matrix y(m.rows(), m.cols());
  kernels::softmax_rows(m.data(), y.data(), m.rows(), m.cols(), scale);
  return y;
}

std::vector<double> feature_norm(const std::vector<double>& v, const std::vector<double>& gamma,
                                 const std::vector<double>& beta, double eps) {
  if (v.empty()) throw ArgumentError("feature_norm: empty vector");
  if (gamma.size() != v.size() || beta.size() != v.size())
    throw ShapeError("feature_norm: affine parameter length mismatch");
  Matrix x(1, static_cast<idx>(v.size()));
  x.values() = v;
  Matrix y(1, static_cast<idx>(v.size()));
  double mean = 0.0;
  double rstd = 0.0;
  kernels::layer_norm_rows(x.data(), gamma.data(), beta.data(), y.data(), &mean, &rstd, 1,
                           x.cols(), eps);
  return y.values();
}

double grad_check(const std::function<double()>& loss_and_grad,
                  const std::vector<ParamTensor*>& params, double eps, double floor) {
  if (!(eps > 0.0)) throw ArgumentError("grad_check: eps must be positive");
  zero_grads(params);
  const double base = loss_and_grad();
  if (!std::isfinite(base)) throw NumericError("grad_check: non-finite loss");
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const ParamTensor* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ParamTensor& p = *params[pi];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double saved = p.value[j];
      p.value[j] = saved + eps;
      zero_grads(params);
      const double up = loss_and_grad();
      p.value[j] = saved - eps;
      zero_grads(params);
      const double down = loss_and_grad();
      p.value[j] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError("grad_check: non-finite loss under perturbation");
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[pi][j];
      const double denom = std::max(std::max(std::fabs(an), std::fabs(fd)), floor);
      worst = std::max(worst, std::fabs(an - fd) / denom);
    }
  }
  // Leave the analytic gradients in place for the caller.
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
  return worst;
}

}  // namespace mmda::numerics
