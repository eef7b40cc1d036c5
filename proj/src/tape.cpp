#include "mmda/tape.hpp"

#include <cmath>
#include <memory>

#include "mmda/kernels.hpp"

namespace mmda::numerics {

namespace k = mmda::kernels;

void Tape::check(bool cond, const char* msg) {
  if (!cond) throw ShapeError(msg);
}

Tape::Node& Tape::node(Var v) {
  if (!v.ok() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ArgumentError("invalid tape variable");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.ok() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw ArgumentError("invalid tape variable");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::push(Matrix value, bool needs_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Matrix* Tape::gptr(std::int32_t id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.needs_grad ? &n.grad : nullptr;
}

double Tape::scalar(Var v) const {
  const Matrix& m = node(v).value;
  check(m.rows() == 1 && m.cols() == 1, "scalar() needs a 1x1 node");
  return m(0, 0);
}

const Matrix& Tape::grad_of(Var v) const {
  const Node& n = node(v);
  if (!ran_backward_ || !n.needs_grad) throw StateError("gradient not available");
  return n.grad;
}

Var Tape::constant(Matrix m) { return push(std::move(m), false); }

Var Tape::param(ParamTensor& p) {
  Matrix m(p.rows, p.cols);
  m.values() = p.value;
  Var v = push(std::move(m), true);
  node(v).bound = &p;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  check(A.cols() == B.rows(), "matmul: inner dimensions differ");
  Matrix C(A.rows(), B.cols());
  k::gemm_nn(A.data(), B.data(), C.data(), A.rows(), A.cols(), B.cols());
  Var out = push(std::move(C), node(a).needs_grad || node(b).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, ib = b.id, io = out.id](Tape& t) {
      const Matrix& dC = t.nodes_[io].grad;
      const Matrix& A = t.nodes_[ia].value;
      const Matrix& B = t.nodes_[ib].value;
      if (Matrix* dA = t.gptr(ia))
        k::gemm_nt_acc(dC.data(), B.data(), dA->data(), A.rows(), B.cols(), A.cols());
      if (Matrix* dB = t.gptr(ib))
        k::gemm_tn_acc(A.data(), dC.data(), dB->data(), A.cols(), A.rows(), B.cols());
    };
  }
  return out;
}

Var Tape::matmul_nt(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  check(A.cols() == B.cols(), "matmul_nt: inner dimensions differ");
  Matrix C(A.rows(), B.rows());
  k::gemm_nt(A.data(), B.data(), C.data(), A.rows(), A.cols(), B.rows());
  Var out = push(std::move(C), node(a).needs_grad || node(b).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, ib = b.id, io = out.id](Tape& t) {
      const Matrix& dC = t.nodes_[io].grad;
      const Matrix& A = t.nodes_[ia].value;
      const Matrix& B = t.nodes_[ib].value;
      if (Matrix* dA = t.gptr(ia))
        k::gemm_nn_acc(dC.data(), B.data(), dA->data(), A.rows(), B.rows(), A.cols());
      if (Matrix* dB = t.gptr(ib))
        k::gemm_tn_acc(dC.data(), A.data(), dB->data(), B.rows(), A.rows(), A.cols());
    };
  }
  return out;
}

Var Tape::add(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  check(A.same_shape(B), "add: shape mismatch");
  Matrix C(A.rows(), A.cols());
  k::add(A.data(), B.data(), C.data(), A.size());
  Var out = push(std::move(C), node(a).needs_grad || node(b).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, ib = b.id, io = out.id](Tape& t) {
      const Matrix& dC = t.nodes_[io].grad;
      for (std::int32_t src : {ia, ib}) {
        if (Matrix* d = t.gptr(src)) {
          for (idx i = 0; i < dC.size(); ++i) d->values()[static_cast<std::size_t>(i)] += dC.data()[i];
        }
      }
    };
  }
  return out;
}

Var Tape::mul(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  check(A.same_shape(B), "mul: shape mismatch");
  Matrix C(A.rows(), A.cols());
  k::hadamard(A.data(), B.data(), C.data(), A.size());
  Var out = push(std::move(C), node(a).needs_grad || node(b).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, ib = b.id, io = out.id](Tape& t) {
      const Matrix& dC = t.nodes_[io].grad;
      const Matrix& A = t.nodes_[ia].value;
      const Matrix& B = t.nodes_[ib].value;
      if (Matrix* dA = t.gptr(ia)) {
        for (idx i = 0; i < dC.size(); ++i) dA->data()[i] += dC.data()[i] * B.data()[i];
      }
      if (Matrix* dB = t.gptr(ib)) {
        for (idx i = 0; i < dC.size(); ++i) dB->data()[i] += dC.data()[i] * A.data()[i];
      }
    };
  }
  return out;
}

Var Tape::scale(Var a, double s) {
  const Matrix& A = node(a).value;
  Matrix C(A.rows(), A.cols());
  for (idx i = 0; i < A.size(); ++i) C.data()[i] = A.data()[i] * s;
  Var out = push(std::move(C), node(a).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, io = out.id, s](Tape& t) {
      const Matrix& dC = t.nodes_[io].grad;
      if (Matrix* dA = t.gptr(ia)) {
        for (idx i = 0; i < dC.size(); ++i) dA->data()[i] += dC.data()[i] * s;
      }
    };
  }
  return out;
}

Var Tape::add_rowvec(Var x, Var bias) {
  const Matrix& X = node(x).value;
  const Matrix& B = node(bias).value;
  check(B.rows() == 1 && B.cols() == X.cols(), "add_rowvec: bias must be 1 x cols");
  Matrix Y(X.rows(), X.cols());
  k::add_rowvec(X.data(), B.data(), Y.data(), X.rows(), X.cols());
  Var out = push(std::move(Y), node(x).needs_grad || node(bias).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ix = x.id, ib = bias.id, io = out.id](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      if (Matrix* dX = t.gptr(ix)) {
        for (idx i = 0; i < dY.size(); ++i) dX->data()[i] += dY.data()[i];
      }
      if (Matrix* dB = t.gptr(ib)) {
        for (idx r = 0; r < dY.rows(); ++r)
          for (idx c = 0; c < dY.cols(); ++c) (*dB)(0, c) += dY(r, c);
      }
    };
  }
  return out;
}

Var Tape::affine(Var x, Var w, Var b) { return add_rowvec(matmul_nt(x, w), b); }

Var Tape::relu(Var a) {
  const Matrix& A = node(a).value;
  Matrix Y(A.rows(), A.cols());
  k::relu(A.data(), Y.data(), A.size());
  Var out = push(std::move(Y), node(a).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, io = out.id](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      const Matrix& A = t.nodes_[ia].value;
      if (Matrix* dA = t.gptr(ia)) k::relu_backward_acc(A.data(), dY.data(), dA->data(), A.size());
    };
  }
  return out;
}

Var Tape::sigmoid(Var a) {
  const Matrix& A = node(a).value;
  Matrix Y(A.rows(), A.cols());
  k::sigmoid(A.data(), Y.data(), A.size());
  Var out = push(std::move(Y), node(a).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, io = out.id](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      const Matrix& Y = t.nodes_[io].value;
      if (Matrix* dA = t.gptr(ia))
        k::sigmoid_backward_acc(Y.data(), dY.data(), dA->data(), Y.size());
    };
  }
  return out;
}

Var Tape::softmax_rows(Var a, double sc) {
  if (!(sc > 0.0)) throw ArgumentError("softmax_rows: scale must be positive");
  const Matrix& A = node(a).value;
  Matrix Y(A.rows(), A.cols());
  k::softmax_rows(A.data(), Y.data(), A.rows(), A.cols(), sc);
  Var out = push(std::move(Y), node(a).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, io = out.id, sc](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      const Matrix& Y = t.nodes_[io].value;
      if (Matrix* dA = t.gptr(ia))
        k::softmax_rows_backward_acc(Y.data(), dY.data(), dA->data(), Y.rows(), Y.cols(), sc);
    };
  }
  return out;
}

Var Tape::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  const Matrix& X = node(x).value;
  const Matrix& G = node(gamma).value;
  const Matrix& B = node(beta).value;
  check(G.rows() == 1 && G.cols() == X.cols(), "layer_norm: gamma must be 1 x cols");
  check(B.rows() == 1 && B.cols() == X.cols(), "layer_norm: beta must be 1 x cols");
  Matrix Y(X.rows(), X.cols());
  auto mean = std::make_shared<std::vector<double>>(static_cast<std::size_t>(X.rows()));
  auto rstd = std::make_shared<std::vector<double>>(static_cast<std::size_t>(X.rows()));
  k::layer_norm_rows(X.data(), G.data(), B.data(), Y.data(), mean->data(), rstd->data(), X.rows(),
                     X.cols(), eps);
  Var out =
      push(std::move(Y), node(x).needs_grad || node(gamma).needs_grad || node(beta).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ix = x.id, ig = gamma.id, ib = beta.id, io = out.id, mean, rstd](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      const Matrix& X = t.nodes_[ix].value;
      const Matrix& G = t.nodes_[ig].value;
      Matrix* dX = t.gptr(ix);
      Matrix* dG = t.gptr(ig);
      Matrix* dB = t.gptr(ib);
      k::layer_norm_rows_backward_acc(X.data(), G.data(), mean->data(), rstd->data(), dY.data(),
                                      dX ? dX->data() : nullptr, dG ? dG->data() : nullptr,
                                      dB ? dB->data() : nullptr, X.rows(), X.cols());
    };
  }
  return out;
}

Var Tape::conv3x3(Var x, Var w, Var b, idx h, idx width) {
  const Matrix& X = node(x).value;
  const Matrix& W = node(w).value;
  const Matrix& B = node(b).value;
  check(X.rows() == h * width, "conv3x3: map size mismatch");
  const idx cin = X.cols();
  const idx cout = W.rows();
  check(W.cols() == cin * 9, "conv3x3: weight must be cout x cin*9");
  check(B.rows() == 1 && B.cols() == cout, "conv3x3: bias must be 1 x cout");
  auto col = std::make_shared<Matrix>(h * width, cin * 9);
  k::im2col3x3(X.data(), col->data(), h, width, cin);
  Matrix Y(h * width, cout);
  k::gemm_nt(col->data(), W.data(), Y.data(), h * width, cin * 9, cout);
  k::add_rowvec(Y.data(), B.data(), Y.data(), h * width, cout);
  Var out = push(std::move(Y),
                 node(x).needs_grad || node(w).needs_grad || node(b).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ix = x.id, iw = w.id, ib = b.id, io = out.id, col, h, width, cin,
                      cout](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      if (Matrix* dW = t.gptr(iw))
        k::gemm_tn_acc(dY.data(), col->data(), dW->data(), cout, h * width, cin * 9);
      if (Matrix* dB = t.gptr(ib)) {
        for (idx r = 0; r < dY.rows(); ++r)
          for (idx c = 0; c < cout; ++c) (*dB)(0, c) += dY(r, c);
      }
      if (Matrix* dX = t.gptr(ix)) {
        const Matrix& W = t.nodes_[iw].value;
        Matrix dcol(h * width, cin * 9);
        k::gemm_nn(dY.data(), W.data(), dcol.data(), h * width, cout, cin * 9);
        k::col2im3x3_acc(dcol.data(), dX->data(), h, width, cin);
      }
    };
  }
  return out;
}

Var Tape::gather_rows(Var a, std::vector<idx> rows) {
  const Matrix& A = node(a).value;
  for (idx r : rows) {
    if (r < 0 || r >= A.rows()) throw ArgumentError("gather_rows: index out of range");
  }
  Matrix Y(static_cast<idx>(rows.size()), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = A.row(rows[i]);
    double* dst = Y.row(static_cast<idx>(i));
    for (idx c = 0; c < A.cols(); ++c) dst[c] = src[c];
  }
  Var out = push(std::move(Y), node(a).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, io = out.id, rows = std::move(rows)](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      if (Matrix* dA = t.gptr(ia)) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const double* src = dY.row(static_cast<idx>(i));
          double* dst = dA->row(rows[i]);
          for (idx c = 0; c < dY.cols(); ++c) dst[c] += src[c];
        }
      }
    };
  }
  return out;
}

Var Tape::mean_rows(Var a) {
  const Matrix& A = node(a).value;
  check(A.rows() >= 1, "mean_rows: empty input");
  Matrix Y(1, A.cols());
  const double inv = 1.0 / static_cast<double>(A.rows());
  for (idx r = 0; r < A.rows(); ++r)
    for (idx c = 0; c < A.cols(); ++c) Y(0, c) += A(r, c);
  for (idx c = 0; c < A.cols(); ++c) Y(0, c) *= inv;
  Var out = push(std::move(Y), node(a).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, io = out.id](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      if (Matrix* dA = t.gptr(ia)) {
        const double inv = 1.0 / static_cast<double>(dA->rows());
        for (idx r = 0; r < dA->rows(); ++r)
          for (idx c = 0; c < dA->cols(); ++c) (*dA)(r, c) += dY(0, c) * inv;
      }
    };
  }
  return out;
}

Var Tape::repeat_rows(Var row, idx n) {
  const Matrix& R = node(row).value;
  check(R.rows() == 1, "repeat_rows: input must be a single row");
  Matrix Y(n, R.cols());
  for (idx r = 0; r < n; ++r)
    for (idx c = 0; c < R.cols(); ++c) Y(r, c) = R(0, c);
  Var out = push(std::move(Y), node(row).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ir = row.id, io = out.id](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      if (Matrix* dR = t.gptr(ir)) {
        for (idx r = 0; r < dY.rows(); ++r)
          for (idx c = 0; c < dY.cols(); ++c) (*dR)(0, c) += dY(r, c);
      }
    };
  }
  return out;
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  check(A.rows() == B.rows(), "concat_cols: row count mismatch");
  Matrix Y(A.rows(), A.cols() + B.cols());
  for (idx r = 0; r < A.rows(); ++r) {
    double* dst = Y.row(r);
    const double* pa = A.row(r);
    const double* pb = B.row(r);
    for (idx c = 0; c < A.cols(); ++c) dst[c] = pa[c];
    for (idx c = 0; c < B.cols(); ++c) dst[A.cols() + c] = pb[c];
  }
  Var out = push(std::move(Y), node(a).needs_grad || node(b).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, ib = b.id, io = out.id](Tape& t) {
      const Matrix& dY = t.nodes_[io].grad;
      const idx ca = t.nodes_[ia].value.cols();
      const idx cb = t.nodes_[ib].value.cols();
      if (Matrix* dA = t.gptr(ia)) {
        for (idx r = 0; r < dY.rows(); ++r)
          for (idx c = 0; c < ca; ++c) (*dA)(r, c) += dY(r, c);
      }
      if (Matrix* dB = t.gptr(ib)) {
        for (idx r = 0; r < dY.rows(); ++r)
          for (idx c = 0; c < cb; ++c) (*dB)(r, c) += dY(r, ca + c);
      }
    };
  }
  return out;
}

Var Tape::mean_all(Var a) {
  const Matrix& A = node(a).value;
  check(A.size() >= 1, "mean_all: empty input");
  Matrix Y(1, 1);
  double s = 0.0;
  for (idx i = 0; i < A.size(); ++i) s += A.data()[i];
  Y(0, 0) = s / static_cast<double>(A.size());
  Var out = push(std::move(Y), node(a).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ia = a.id, io = out.id](Tape& t) {
      const double up = t.nodes_[io].grad(0, 0);
      if (Matrix* dA = t.gptr(ia)) {
        const double g = up / static_cast<double>(dA->size());
        for (idx i = 0; i < dA->size(); ++i) dA->data()[i] += g;
      }
    };
  }
  return out;
}

Var Tape::cross_entropy_rows(Var logits, const std::vector<int>& labels, int ignore_label) {
  const Matrix& L = node(logits).value;
  check(static_cast<idx>(labels.size()) == L.rows(), "cross_entropy: label count mismatch");
  const idx c = L.cols();
  idx valid = 0;
  auto probs = std::make_shared<Matrix>(L.rows(), c);
  double total = 0.0;
  for (idx r = 0; r < L.rows(); ++r) {
    const double* lr = L.row(r);
    double mx = lr[0];
    for (idx j = 1; j < c; ++j) mx = std::max(mx, lr[j]);
    double sum = 0.0;
    for (idx j = 0; j < c; ++j) sum += std::exp(lr[j] - mx);
    const double lse = mx + std::log(sum);
    double* pr = probs->row(r);
    for (idx j = 0; j < c; ++j) pr[j] = std::exp(lr[j] - lse);
    const int y = labels[static_cast<std::size_t>(r)];
    if (y == ignore_label) continue;
    if (y < 0 || y >= c) throw ArgumentError("cross_entropy: label out of range");
    total += lse - lr[y];
    ++valid;
  }
  if (valid == 0) throw ArgumentError("cross_entropy: no valid (non-ignored) points");
  Matrix Y(1, 1);
  Y(0, 0) = total / static_cast<double>(valid);
  Var out = push(std::move(Y), node(logits).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [il = logits.id, io = out.id, probs, labels, ignore_label, valid](Tape& t) {
      const double up = t.nodes_[io].grad(0, 0);
      if (Matrix* dL = t.gptr(il)) {
        const double invn = up / static_cast<double>(valid);
        for (idx r = 0; r < dL->rows(); ++r) {
          const int y = labels[static_cast<std::size_t>(r)];
          if (y == ignore_label) continue;
          const double* pr = probs->row(r);
          double* dr = dL->row(r);
          for (idx j = 0; j < dL->cols(); ++j) dr[j] += invn * pr[j];
          dr[y] -= invn;
        }
      }
    };
  }
  return out;
}

Var Tape::bce_mean(Var probs, double label, double clamp_lo) {
  const Matrix& P = node(probs).value;
  check(P.cols() == 1, "bce_mean: probs must be n x 1");
  check(P.rows() >= 1, "bce_mean: empty input");
  if (!P.all_finite()) throw NumericError("bce_mean: non-finite probability");
  const double lo = clamp_lo;
  const double hi = 1.0 - clamp_lo;
  double total = 0.0;
  for (idx r = 0; r < P.rows(); ++r) {
    const double p = std::min(std::max(P(r, 0), lo), hi);
    total += -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
  }
  Matrix Y(1, 1);
  Y(0, 0) = total / static_cast<double>(P.rows());
  Var out = push(std::move(Y), node(probs).needs_grad);
  if (node(out).needs_grad) {
    node(out).back = [ip = probs.id, io = out.id, label, lo, hi](Tape& t) {
      const double up = t.nodes_[io].grad(0, 0);
      const Matrix& P = t.nodes_[ip].value;
      if (Matrix* dP = t.gptr(ip)) {
        const double invn = up / static_cast<double>(P.rows());
        for (idx r = 0; r < P.rows(); ++r) {
          const double p = P(r, 0);
          if (p <= lo || p >= hi) continue;  // clamped region has zero slope
          (*dP)(r, 0) += invn * (p - label) / (p * (1.0 - p));
        }
      }
    };
  }
  return out;
}

void Tape::backward(Var loss) {
  Node& ln = node(loss);
  check(ln.value.rows() == 1 && ln.value.cols() == 1, "backward: loss must be 1x1");
  if (!ln.needs_grad) throw StateError("backward: loss does not depend on any parameter");
  for (Node& n : nodes_) {
    if (n.needs_grad) n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  ln.grad(0, 0) = 1.0;
  for (std::int32_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.back) n.back(*this);
  }
  for (Node& n : nodes_) {
    if (n.bound != nullptr) {
      for (std::size_t i = 0; i < n.bound->grad.size(); ++i)
        n.bound->grad[i] += n.grad.data()[static_cast<idx>(i)];
    }
  }
  ran_backward_ = true;
}

}  // namespace mmda::numerics
