#include <cmath>

#include "kernels_detail.hpp"
#include "mmda/kernels.hpp"

namespace mmda::kernels::serial {

namespace d = detail;

void gemm_nn(const double* a, const double* b, double* c, idx m, idx k, idx n) {
  for (idx i = 0; i < m; ++i) d::gemm_nn_row<false>(a, b, c, i, k, n);
}

void gemm_nn_acc(const double* a, const double* b, double* c, idx m, idx k, idx n) {
  for (idx i = 0; i < m; ++i) d::gemm_nn_row<true>(a, b, c, i, k, n);
}

void gemm_nt(const double* a, const double* b, double* c, idx m, idx k, idx n) {
  for (idx i = 0; i < m; ++i) d::gemm_nt_row<false>(a, b, c, i, k, n);
}

void gemm_nt_acc(const double* a, const double* b, double* c, idx m, idx k, idx n) {
  for (idx i = 0; i < m; ++i) d::gemm_nt_row<true>(a, b, c, i, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, idx m, idx k, idx n) {
  for (idx i = 0; i < m; ++i) d::gemm_tn_row<false>(a, b, c, i, k, m, n);
}

void gemm_tn_acc(const double* a, const double* b, double* c, idx m, idx k, idx n) {
  for (idx i = 0; i < m; ++i) d::gemm_tn_row<true>(a, b, c, i, k, m, n);
}

void softmax_rows(const double* x, double* y, idx rows, idx cols, double scale) {
  const double inv = 1.0 / scale;
  for (idx i = 0; i < rows; ++i) d::softmax_row(x, y, i, cols, inv);
}

void softmax_rows_backward_acc(const double* y, const double* dy, double* dx, idx rows, idx cols,
                               double scale) {
  const double inv = 1.0 / scale;
  for (idx i = 0; i < rows; ++i) d::softmax_backward_row(y, dy, dx, i, cols, inv);
}

void relu(const double* x, double* y, idx n) {
  for (idx i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_acc(const double* x, const double* dy, double* dx, idx n) {
  for (idx i = 0; i < n; ++i) {
    if (x[i] > 0.0) dx[i] += dy[i];
  }
}

void sigmoid(const double* x, double* y, idx n) {
  for (idx i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_backward_acc(const double* y, const double* dy, double* dx, idx n) {
  for (idx i = 0; i < n; ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

void hadamard(const double* a, const double* b, double* c, idx n) {
  for (idx i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

void add(const double* a, const double* b, double* c, idx n) {
  for (idx i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void add_rowvec(const double* x, const double* bias, double* y, idx rows, idx cols) {
  for (idx i = 0; i < rows; ++i) {
    const double* xr = x + i * cols;
    double* yr = y + i * cols;
    for (idx j = 0; j < cols; ++j) yr[j] = xr[j] + bias[j];
  }
}

void layer_norm_rows(const double* x, const double* gamma, const double* beta, double* y,
                     double* mean, double* rstd, idx rows, idx cols, double eps) {
  for (idx i = 0; i < rows; ++i) d::layer_norm_row(x, gamma, beta, y, mean, rstd, i, cols, eps);
}

void layer_norm_rows_backward_acc(const double* x, const double* gamma, const double* mean,
                                  const double* rstd, const double* dy, double* dx, double* dgamma,
                                  double* dbeta, idx rows, idx cols) {
  if (dx != nullptr) {
    for (idx i = 0; i < rows; ++i)
      d::layer_norm_backward_dx_row(x, gamma, mean, rstd, dy, dx, i, cols);
  }
  if (dgamma == nullptr && dbeta == nullptr) return;
  for (idx j = 0; j < cols; ++j) {
    double dg = 0.0;
    double db = 0.0;
    for (idx i = 0; i < rows; ++i) {
      const double xh = (x[i * cols + j] - mean[i]) * rstd[i];
      dg += dy[i * cols + j] * xh;
      db += dy[i * cols + j];
    }
    if (dgamma != nullptr) dgamma[j] += dg;
    if (dbeta != nullptr) dbeta[j] += db;
  }
}

void im2col3x3(const double* x, double* col, idx h, idx w, idx cin) {
  for (idx p = 0; p < h * w; ++p) d::im2col3x3_row(x, col, p, h, w, cin);
}

void col2im3x3_acc(const double* dcol, double* dx, idx h, idx w, idx cin) {
  for (idx p = 0; p < h * w; ++p) d::col2im3x3_row(dcol, dx, p, h, w, cin);
}

}  // namespace mmda::kernels::serial
