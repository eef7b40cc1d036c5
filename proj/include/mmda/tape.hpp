#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "mmda/matrix.hpp"
#include "mmda/params.hpp"

namespace mmda::numerics {

/// Handle to a node on a Tape.
struct Var {
  std::int32_t id = -1;
  bool ok() const { return id >= 0; }
};

/// Reverse-mode tape over Matrix-valued operations. Forward calls record
/// nodes in evaluation order; backward() walks them in reverse, accumulating
/// gradients into every node that (transitively) depends on a ParamTensor.
/// One Tape per forward evaluation; tapes are not thread-safe.
class Tape {
 public:
  Var constant(Matrix m);
  Var param(ParamTensor& p);

  Var matmul(Var a, Var b);              // A * B
  Var matmul_nt(Var a, Var b);           // A * B^T
  Var add(Var a, Var b);
  Var mul(Var a, Var b);                 // elementwise
  Var scale(Var a, double s);
  Var add_rowvec(Var x, Var bias);       // bias is 1 x cols
  Var affine(Var x, Var w, Var b);       // x * w^T + b; w is out x in, b is 1 x out
  Var relu(Var a);
  Var sigmoid(Var a);
  Var softmax_rows(Var a, double scale);
  Var layer_norm_rows(Var x, Var gamma, Var beta, double eps);
  /// 3x3 conv, stride 1, zero padding, over an (h*w) x cin feature map.
  /// w is cout x (cin*9) with column index ci*9 + kr*3 + kc; b is 1 x cout.
  Var conv3x3(Var x, Var w, Var b, idx h, idx width);
  Var gather_rows(Var a, std::vector<idx> rows);
  Var mean_rows(Var a);                  // 1 x cols column means
  Var repeat_rows(Var row, idx n);
  Var concat_cols(Var a, Var b);
  Var mean_all(Var a);                   // 1 x 1
  /// Mean over non-ignored rows of -log softmax(logits)[label].
  Var cross_entropy_rows(Var logits, const std::vector<int>& labels, int ignore_label);
  /// Mean binary cross entropy of an n x 1 probability column against a
  /// constant 0/1 label; probabilities are clamped to [lo, 1-lo] inside.
  Var bce_mean(Var probs, double label, double clamp_lo = 1e-7);

  const Matrix& val(Var v) const { return node(v).value; }
  double scalar(Var v) const;
  const Matrix& grad_of(Var v) const;

  /// Runs the backward sweep from a 1x1 loss node. Param gradients are
  /// accumulated into their ParamTensor::grad.
  void backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    ParamTensor* bound = nullptr;
    bool needs_grad = false;
    std::function<void(Tape&)> back;
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Matrix value, bool needs_grad);
  Matrix* gptr(std::int32_t id);
  static void check(bool cond, const char* msg);

  // deque keeps node references stable while ops keep recording.
  std::deque<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace mmda::numerics
