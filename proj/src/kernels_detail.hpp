#pragma once

#include <cmath>

#include "mmda/kernels.hpp"

// Per-row workers shared by the OpenMP and serial kernel flavors. Each worker
// touches exactly one output row (or element range), so the flavors differ
// only in how rows are scheduled and stay bitwise identical.

namespace mmda::kernels::detail {

template <bool Acc>
inline void gemm_nn_row(const double* a, const double* b, double* c, idx i, idx k, idx n) {
  double* crow = c + i * n;
  if (!Acc) {
    for (idx j = 0; j < n; ++j) crow[j] = 0.0;
  }
  const double* arow = a + i * k;
  for (idx p = 0; p < k; ++p) {
    const double av = arow[p];
    const double* brow = b + p * n;
    for (idx j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

template <bool Acc>
inline void gemm_nt_row(const double* a, const double* b, double* c, idx i, idx k, idx n) {
  const double* arow = a + i * k;
  double* crow = c + i * n;
  for (idx j = 0; j < n; ++j) {
    const double* brow = b + j * k;
    double s = 0.0;
    for (idx p = 0; p < k; ++p) s += arow[p] * brow[p];
    if (Acc)
      crow[j] += s;
    else
      crow[j] = s;
  }
}

// Row i of C = A^T B is built from column i of A.
template <bool Acc>
inline void gemm_tn_row(const double* a, const double* b, double* c, idx i, idx k, idx m, idx n) {
  double* crow = c + i * n;
  if (!Acc) {
    for (idx j = 0; j < n; ++j) crow[j] = 0.0;
  }
  for (idx p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    const double* brow = b + p * n;
    for (idx j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

inline void softmax_row(const double* x, double* y, idx i, idx cols, double inv_scale) {
  const double* xr = x + i * cols;
  double* yr = y + i * cols;
  double mx = xr[0] * inv_scale;
  for (idx j = 1; j < cols; ++j) mx = std::max(mx, xr[j] * inv_scale);
  double sum = 0.0;
  for (idx j = 0; j < cols; ++j) {
    const double e = std::exp(xr[j] * inv_scale - mx);
    yr[j] = e;
    sum += e;
  }
  const double inv = 1.0 / sum;
  for (idx j = 0; j < cols; ++j) yr[j] *= inv;
}

inline void softmax_backward_row(const double* y, const double* dy, double* dx, idx i, idx cols,
                                 double inv_scale) {
  const double* yr = y + i * cols;
  const double* dyr = dy + i * cols;
  double* dxr = dx + i * cols;
  double dot = 0.0;
  for (idx j = 0; j < cols; ++j) dot += dyr[j] * yr[j];
  for (idx j = 0; j < cols; ++j) dxr[j] += (dyr[j] - dot) * yr[j] * inv_scale;
}

inline void layer_norm_row(const double* x, const double* gamma, const double* beta, double* y,
                           double* mean, double* rstd, idx i, idx cols, double eps) {
  const double* xr = x + i * cols;
  double* yr = y + i * cols;
  double mu = 0.0;
  for (idx j = 0; j < cols; ++j) mu += xr[j];
  mu /= static_cast<double>(cols);
  double var = 0.0;
  for (idx j = 0; j < cols; ++j) {
    const double d = xr[j] - mu;
    var += d * d;
  }
  var /= static_cast<double>(cols);
  const double rs = 1.0 / std::sqrt(var + eps);
  mean[i] = mu;
  rstd[i] = rs;
  for (idx j = 0; j < cols; ++j) yr[j] = gamma[j] * ((xr[j] - mu) * rs) + beta[j];
}

inline void layer_norm_backward_dx_row(const double* x, const double* gamma, const double* mean,
                                       const double* rstd, const double* dy, double* dx, idx i,
                                       idx cols) {
  const double* xr = x + i * cols;
  const double* dyr = dy + i * cols;
  double* dxr = dx + i * cols;
  const double mu = mean[i];
  const double rs = rstd[i];
  const double inv_n = 1.0 / static_cast<double>(cols);
  double sum_g = 0.0;
  double sum_gx = 0.0;
  for (idx j = 0; j < cols; ++j) {
    const double g = dyr[j] * gamma[j];
    sum_g += g;
    sum_gx += g * (xr[j] - mu) * rs;
  }
  for (idx j = 0; j < cols; ++j) {
    const double g = dyr[j] * gamma[j];
    const double xh = (xr[j] - mu) * rs;
    dxr[j] += rs * (g - inv_n * sum_g - xh * inv_n * sum_gx);
  }
}

inline void im2col3x3_row(const double* x, double* col, idx p, idx h, idx w, idx cin) {
  const idx y = p / w;
  const idx xcol = p % w;
  double* out = col + p * cin * 9;
  for (idx ci = 0; ci < cin; ++ci) {
    for (idx kr = 0; kr < 3; ++kr) {
      const idx yy = y + kr - 1;
      for (idx kc = 0; kc < 3; ++kc) {
        const idx xx = xcol + kc - 1;
        double v = 0.0;
        if (yy >= 0 && yy < h && xx >= 0 && xx < w) v = x[(yy * w + xx) * cin + ci];
        out[ci * 9 + kr * 3 + kc] = v;
      }
    }
  }
}

inline void col2im3x3_row(const double* dcol, double* dx, idx p, idx h, idx w, idx cin) {
  const idx yi = p / w;
  const idx xi = p % w;
  double* out = dx + p * cin;
  for (idx ci = 0; ci < cin; ++ci) {
    double s = 0.0;
    for (idx kr = 0; kr < 3; ++kr) {
      const idx yo = yi - kr + 1;
      if (yo < 0 || yo >= h) continue;
      for (idx kc = 0; kc < 3; ++kc) {
        const idx xo = xi - kc + 1;
        if (xo < 0 || xo >= w) continue;
        s += dcol[(yo * w + xo) * cin * 9 + ci * 9 + kr * 3 + kc];
      }
    }
    out[ci] += s;
  }
}

}  // namespace mmda::kernels::detail
