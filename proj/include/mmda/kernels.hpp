#pragma once

#include <cstdint>

namespace mmda::kernels {

using idx = std::int64_t;

// Dense kernels behind the tape ops. The OpenMP versions below partition work
// by output row/element only, so results are bitwise identical for any thread
// count. mmda::kernels::serial holds plain-loop versions of the same workers;
// tests assert bitwise equality and tools/kernel_bench compares timings.

// C[m x n] = A[m x k] * B[k x n]
void gemm_nn(const double* a, const double* b, double* c, idx m, idx k, idx n);
void gemm_nn_acc(const double* a, const double* b, double* c, idx m, idx k, idx n);
// C[m x n] = A[m x k] * B[n x k]^T
void gemm_nt(const double* a, const double* b, double* c, idx m, idx k, idx n);
void gemm_nt_acc(const double* a, const double* b, double* c, idx m, idx k, idx n);
// C[m x n] = A[k x m]^T * B[k x n]
void gemm_tn(const double* a, const double* b, double* c, idx m, idx k, idx n);
void gemm_tn_acc(const double* a, const double* b, double* c, idx m, idx k, idx n);

// Row-wise softmax of X / scale, max-subtracted per row.
void softmax_rows(const double* x, double* y, idx rows, idx cols, double scale);
void softmax_rows_backward_acc(const double* y, const double* dy, double* dx, idx rows, idx cols,
                               double scale);

void relu(const double* x, double* y, idx n);
void relu_backward_acc(const double* x, const double* dy, double* dx, idx n);

void sigmoid(const double* x, double* y, idx n);
void sigmoid_backward_acc(const double* y, const double* dy, double* dx, idx n);

void hadamard(const double* a, const double* b, double* c, idx n);
void add(const double* a, const double* b, double* c, idx n);
// Y[r x c] = X[r x c] + row broadcast of bias[1 x c]
void add_rowvec(const double* x, const double* bias, double* y, idx rows, idx cols);

// Per-row normalization to zero mean / unit variance, then gamma/beta affine.
// mean/rstd (length rows) are stashed for the backward pass.
void layer_norm_rows(const double* x, const double* gamma, const double* beta, double* y,
                     double* mean, double* rstd, idx rows, idx cols, double eps);
void layer_norm_rows_backward_acc(const double* x, const double* gamma, const double* mean,
                                  const double* rstd, const double* dy, double* dx, double* dgamma,
                                  double* dbeta, idx rows, idx cols);

// 3x3 convolution support, stride 1, zero padding. Feature maps are stored as
// (H*W) x C row-major matrices. col is (H*W) x (cin*9) with column index
// ci*9 + kr*3 + kc.
void im2col3x3(const double* x, double* col, idx h, idx w, idx cin);
void col2im3x3_acc(const double* dcol, double* dx, idx h, idx w, idx cin);

namespace serial {

void gemm_nn(const double* a, const double* b, double* c, idx m, idx k, idx n);
void gemm_nn_acc(const double* a, const double* b, double* c, idx m, idx k, idx n);
void gemm_nt(const double* a, const double* b, double* c, idx m, idx k, idx n);
void gemm_nt_acc(const double* a, const double* b, double* c, idx m, idx k, idx n);
void gemm_tn(const double* a, const double* b, double* c, idx m, idx k, idx n);
void gemm_tn_acc(const double* a, const double* b, double* c, idx m, idx k, idx n);
void softmax_rows(const double* x, double* y, idx rows, idx cols, double scale);
void softmax_rows_backward_acc(const double* y, const double* dy, double* dx, idx rows, idx cols,
                               double scale);
void relu(const double* x, double* y, idx n);
void relu_backward_acc(const double* x, const double* dy, double* dx, idx n);
void sigmoid(const double* x, double* y, idx n);
void sigmoid_backward_acc(const double* y, const double* dy, double* dx, idx n);
void hadamard(const double* a, const double* b, double* c, idx n);
void add(const double* a, const double* b, double* c, idx n);
void add_rowvec(const double* x, const double* bias, double* y, idx rows, idx cols);
void layer_norm_rows(const double* x, const double* gamma, const double* beta, double* y,
                     double* mean, double* rstd, idx rows, idx cols, double eps);
void layer_norm_rows_backward_acc(const double* x, const double* gamma, const double* mean,
                                  const double* rstd, const double* dy, double* dx, double* dgamma,
                                  double* dbeta, idx rows, idx cols);
void im2col3x3(const double* x, double* col, idx h, idx w, idx cin);
void col2im3x3_acc(const double* dcol, double* dx, idx h, idx w, idx cin);

}  // namespace serial

}  // namespace mmda::kernels
