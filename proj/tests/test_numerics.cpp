#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "mmda/kernels.hpp"
#include "mmda/numerics.hpp"

using namespace mmda;
using namespace mmda::numerics;
namespace kern = mmda::kernels;

namespace {

Matrix random_matrix(idx rows, idx cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (idx i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference bitwise") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const idx m = 1 + static_cast<idx>(rng.uniform_int(40));
    const idx k = 1 + static_cast<idx>(rng.uniform_int(40));
    const idx n = 1 + static_cast<idx>(rng.uniform_int(40));
    Matrix A = random_matrix(m, k, rng);
    Matrix B = random_matrix(k, n, rng);
    Matrix Bt = random_matrix(n, k, rng);
    Matrix At = random_matrix(k, m, rng);

    Matrix c1(m, n), c2(m, n);
    kern::gemm_nn(A.data(), B.data(), c1.data(), m, k, n);
    kern::serial::gemm_nn(A.data(), B.data(), c2.data(), m, k, n);
    CHECK(bitwise_equal(c1, c2));

    kern::gemm_nt(A.data(), Bt.data(), c1.data(), m, k, n);
    kern::serial::gemm_nt(A.data(), Bt.data(), c2.data(), m, k, n);
    CHECK(bitwise_equal(c1, c2));

    kern::gemm_tn(At.data(), B.data(), c1.data(), m, k, n);
    kern::serial::gemm_tn(At.data(), B.data(), c2.data(), m, k, n);
    CHECK(bitwise_equal(c1, c2));

    Matrix acc1 = random_matrix(m, n, rng);
    Matrix acc2 = acc1;
    kern::gemm_nn_acc(A.data(), B.data(), acc1.data(), m, k, n);
    kern::serial::gemm_nn_acc(A.data(), B.data(), acc2.data(), m, k, n);
    CHECK(bitwise_equal(acc1, acc2));

    Matrix X = random_matrix(m, n, rng, -30.0, 30.0);
    Matrix y1(m, n), y2(m, n);
    kern::softmax_rows(X.data(), y1.data(), m, n, 2.0);
    kern::serial::softmax_rows(X.data(), y2.data(), m, n, 2.0);
    CHECK(bitwise_equal(y1, y2));

    Matrix dY = random_matrix(m, n, rng);
    Matrix dx1(m, n), dx2(m, n);
    kern::softmax_rows_backward_acc(y1.data(), dY.data(), dx1.data(), m, n, 2.0);
    kern::serial::softmax_rows_backward_acc(y1.data(), dY.data(), dx2.data(), m, n, 2.0);
    CHECK(bitwise_equal(dx1, dx2));

    Matrix gamma = random_matrix(1, n, rng, 0.5, 1.5);
    Matrix beta = random_matrix(1, n, rng);
    Matrix mean1(1, m), mean2(1, m), rstd1(1, m), rstd2(1, m);
    kern::layer_norm_rows(X.data(), gamma.data(), beta.data(), y1.data(), mean1.data(),
                          rstd1.data(), m, n, 1e-5);
    kern::serial::layer_norm_rows(X.data(), gamma.data(), beta.data(), y2.data(), mean2.data(),
                                  rstd2.data(), m, n, 1e-5);
    CHECK(bitwise_equal(y1, y2));

    Matrix lnx1(m, n), lnx2(m, n), dg1(1, n), dg2(1, n), db1(1, n), db2(1, n);
    kern::layer_norm_rows_backward_acc(X.data(), gamma.data(), mean1.data(), rstd1.data(),
                                       dY.data(), lnx1.data(), dg1.data(), db1.data(), m, n);
    kern::serial::layer_norm_rows_backward_acc(X.data(), gamma.data(), mean2.data(), rstd2.data(),
                                               dY.data(), lnx2.data(), dg2.data(), db2.data(), m,
                                               n);
    CHECK(bitwise_equal(lnx1, lnx2));
    CHECK(bitwise_equal(dg1, dg2));
    CHECK(bitwise_equal(db1, db2));
  }
}

TEST_CASE("im2col/col2im match serial and are adjoint") {
  Rng rng(7);
  const idx h = 9, w = 7, cin = 3;
  Matrix X = random_matrix(h * w, cin, rng);
  Matrix col1(h * w, cin * 9), col2(h * w, cin * 9);
  kern::im2col3x3(X.data(), col1.data(), h, w, cin);
  kern::serial::im2col3x3(X.data(), col2.data(), h, w, cin);
  CHECK(bitwise_equal(col1, col2));

  Matrix dcol = random_matrix(h * w, cin * 9, rng);
  Matrix dx1(h * w, cin), dx2(h * w, cin);
  kern::col2im3x3_acc(dcol.data(), dx1.data(), h, w, cin);
  kern::serial::col2im3x3_acc(dcol.data(), dx2.data(), h, w, cin);
  CHECK(bitwise_equal(dx1, dx2));

  // <dcol, im2col(x)> == <col2im(dcol), x>
  double lhs = 0.0;
  for (idx i = 0; i < col1.size(); ++i) lhs += dcol.data()[i] * col1.data()[i];
  double rhs = 0.0;
  for (idx i = 0; i < X.size(); ++i) rhs += dx1.data()[i] * X.data()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("matmul worked examples") {
  Matrix a = Matrix::from({{1, 2}, {3, 4}});
  Matrix b = Matrix::from({{5, 6}, {7, 8}});
  Matrix c = matmul(a, b);
  CHECK(c(0, 0) == 19.0);
  CHECK(c(0, 1) == 22.0);
  CHECK(c(1, 0) == 43.0);
  CHECK(c(1, 1) == 50.0);

  Matrix s = matmul(Matrix::from({{2}}), Matrix::from({{3}}));
  CHECK(s(0, 0) == 6.0);

  Rng rng(3);
  Matrix m = random_matrix(4, 5, rng);
  CHECK(bitwise_equal(matmul(Matrix::identity(4), m), m));
  CHECK(bitwise_equal(matmul(m, Matrix::identity(5)), m));

  CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST_CASE("softmax_rows examples and row-sum invariant") {
  Matrix one = softmax_rows(Matrix::from({{3.7}}), 5.0);
  CHECK(one(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix sym = softmax_rows(Matrix::from({{2.5, 2.5}}), 1.0);
  CHECK(sym(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

  Matrix analytic = softmax_rows(Matrix::from({{0.0, std::log(3.0)}}), 1.0);
  CHECK(analytic(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(analytic(0, 1) == doctest::Approx(0.75).epsilon(1e-12));

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x = random_matrix(6, 9, rng, -50.0, 50.0);
    Matrix y = softmax_rows(x, 1.0 + rng.uniform() * 3.0);
    for (idx r = 0; r < y.rows(); ++r) {
      double sum = 0.0;
      for (idx col = 0; col < y.cols(); ++col) {
        sum += y(r, col);
        CHECK(y(r, col) > 0.0);
        CHECK(y(r, col) < 1.0 + 1e-12);
      }
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
  }

  CHECK_THROWS_AS(softmax_rows(Matrix(1, 2), 0.0), ArgumentError);
  CHECK_THROWS_AS(softmax_rows(Matrix(1, 2), -1.0), ArgumentError);
}

TEST_CASE("feature_norm examples") {
  std::vector<double> id_gamma = {1, 1, 1};
  std::vector<double> id_beta = {0, 0, 0};

  auto constant = feature_norm({4.0, 4.0, 4.0}, id_gamma, id_beta);
  for (double v : constant) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));

  auto already = feature_norm({1.0, -1.0}, {1, 1}, {0, 0});
  CHECK(already[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(already[1] == doctest::Approx(-1.0).epsilon(1e-4));

  auto derived = feature_norm({0.0, 2.0, 4.0}, id_gamma, id_beta);
  CHECK(derived[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(derived[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(derived[2] == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("adam examples") {
  SUBCASE("zero gradients leave parameters unchanged") {
    ParamTensor p("p", 2, 3);
    Rng rng(5);
    p.init_normal(rng, 1.0);
    const std::vector<double> before = p.value;
    OptimizerState st;
    std::vector<ParamTensor*> ps = {&p};
    adam_step(ps, st, 1e-3);
    adam_step(ps, st, 1e-3);
    CHECK(p.value == before);
  }

  SUBCASE("first step approximates -lr * sign(g)") {
    ParamTensor p("p", 1, 1);
    p.value[0] = 0.7;
    p.grad[0] = 0.3;
    OptimizerState st;
    std::vector<ParamTensor*> ps = {&p};
    adam_step(ps, st, 1e-2);
    CHECK(p.value[0] == doctest::Approx(0.7 - 1e-2).epsilon(1e-5));
    CHECK(p.grad[0] == 0.0);
  }

  SUBCASE("two identical steps have magnitudes within 1%") {
    ParamTensor p("p", 1, 1);
    p.value[0] = 0.0;
    OptimizerState st;
    std::vector<ParamTensor*> ps = {&p};
    p.grad[0] = -2.0;
    adam_step(ps, st, 1e-3);
    const double step1 = p.value[0];
    p.grad[0] = -2.0;
    adam_step(ps, st, 1e-3);
    const double step2 = p.value[0] - step1;
    CHECK(std::fabs(step2 - step1) / std::fabs(step1) < 0.01);
  }

  SUBCASE("changing the parameter set is a state error") {
    ParamTensor a("a", 1, 1), b("b", 1, 1);
    OptimizerState st;
    std::vector<ParamTensor*> one = {&a};
    adam_step(one, st, 1e-3);
    std::vector<ParamTensor*> two = {&a, &b};
    CHECK_THROWS_AS(adam_step(two, st, 1e-3), StateError);
  }
}

TEST_CASE("poly_lr examples and monotonicity") {
  CHECK(poly_lr(0, 100, 1e-3, 0.9) == 1e-3);
  CHECK(poly_lr(100, 100, 1e-3, 0.9) == 0.0);
  CHECK(poly_lr(50, 100, 1e-3, 0.9) == doctest::Approx(5.35887e-4).epsilon(1e-4));
  CHECK_THROWS_AS(poly_lr(101, 100, 1e-3, 0.9), ArgumentError);
  CHECK_THROWS_AS(poly_lr(0, 0, 1e-3, 0.9), ArgumentError);

  double prev = poly_lr(0, 57, 2e-3, 0.9);
  for (int it = 1; it <= 57; ++it) {
    const double cur = poly_lr(it, 57, 2e-3, 0.9);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("grad_check on analytic cases") {
  SUBCASE("quadratic loss is exact to rounding") {
    ParamTensor p("p", 2, 2);
    Rng rng(9);
    p.init_normal(rng, 1.0);
    std::vector<ParamTensor*> ps = {&p};
    auto loss = [&]() {
      double l = 0.0;
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        l += 0.5 * p.value[i] * p.value[i];
        p.grad[i] += p.value[i];
      }
      return l;
    };
    CHECK(grad_check(loss, ps, 1e-5) < 1e-8);
  }

  SUBCASE("constant loss gives zero error") {
    ParamTensor p("p", 1, 3);
    std::vector<ParamTensor*> ps = {&p};
    auto loss = [&]() { return 2.5; };
    CHECK(grad_check(loss, ps, 1e-5) == 0.0);
  }
}

namespace {

double tape_grad_error(const std::function<Var(Tape&, std::vector<ParamTensor*>&)>& build,
                       std::vector<ParamTensor*> params) {
  auto loss = [&]() {
    Tape tape;
    Var l = build(tape, params);
    tape.backward(l);
    return tape.scalar(l);
  };
  return grad_check(loss, params, 1e-5);
}

}  // namespace

TEST_CASE("every tape op passes the finite-difference check") {
  Rng rng(17);
  ParamTensor a("a", 3, 4), b("b", 4, 2), c("c", 3, 4), row("row", 1, 4);
  a.init_normal(rng, 0.8);
  b.init_normal(rng, 0.8);
  c.init_normal(rng, 0.8);
  row.init_normal(rng, 0.8);

  SUBCASE("matmul") {
    CHECK(tape_grad_error(
              [](Tape& t, std::vector<ParamTensor*>& ps) {
                return t.mean_all(t.matmul(t.param(*ps[0]), t.param(*ps[1])));
              },
              {&a, &b}) < 1e-4);
  }

  SUBCASE("matmul_nt mul add scale") {
    CHECK(tape_grad_error(
              [](Tape& t, std::vector<ParamTensor*>& ps) {
                Var x = t.param(*ps[0]);
                Var y = t.param(*ps[1]);
                Var z = t.add(t.mul(x, y), t.scale(x, 0.3));
                return t.mean_all(t.matmul_nt(z, y));
              },
              {&a, &c}) < 1e-4);
  }

  SUBCASE("softmax relu sigmoid") {
    CHECK(tape_grad_error(
              [](Tape& t, std::vector<ParamTensor*>& ps) {
                Var x = t.param(*ps[0]);
                Var s = t.softmax_rows(x, 1.7);
                return t.mean_all(t.mul(t.relu(x), t.sigmoid(s)));
              },
              {&a}) < 1e-4);
  }

  SUBCASE("layer_norm add_rowvec") {
    ParamTensor gamma("g", 1, 4), beta("be", 1, 4);
    gamma.init_constant(1.2);
    Rng r2(19);
    beta.init_normal(r2, 0.3);
    CHECK(tape_grad_error(
              [](Tape& t, std::vector<ParamTensor*>& ps) {
                Var x = t.add_rowvec(t.param(*ps[0]), t.param(*ps[3]));
                Var n = t.layer_norm_rows(x, t.param(*ps[1]), t.param(*ps[2]), 1e-5);
                return t.mean_all(n);
              },
              {&a, &gamma, &beta, &row}) < 1e-4);
  }

  SUBCASE("conv3x3") {
    ParamTensor img("img", 5 * 4, 2), w("w", 3, 2 * 9), bias("bias", 1, 3);
    Rng r3(23);
    img.init_normal(r3, 0.7);
    w.init_normal(r3, 0.5);
    bias.init_normal(r3, 0.2);
    CHECK(tape_grad_error(
              [](Tape& t, std::vector<ParamTensor*>& ps) {
                Var x = t.conv3x3(t.param(*ps[0]), t.param(*ps[1]), t.param(*ps[2]), 5, 4);
                return t.mean_all(t.relu(x));
              },
              {&img, &w, &bias}) < 1e-4);
  }

  SUBCASE("gather mean repeat concat") {
    CHECK(tape_grad_error(
              [](Tape& t, std::vector<ParamTensor*>& ps) {
                Var x = t.param(*ps[0]);
                Var g = t.gather_rows(x, {2, 0, 2});
                Var m = t.repeat_rows(t.mean_rows(g), 3);
                return t.mean_all(t.concat_cols(g, m));
              },
              {&a}) < 1e-4);
  }

  SUBCASE("cross entropy") {
    CHECK(tape_grad_error(
              [](Tape& t, std::vector<ParamTensor*>& ps) {
                Var logits = t.matmul(t.param(*ps[0]), t.param(*ps[1]));
                return t.cross_entropy_rows(logits, {0, -1, 1}, -1);
              },
              {&a, &b}) < 1e-4);
  }

  SUBCASE("bce") {
    ParamTensor z("z", 4, 1);
    Rng r4(29);
    z.init_normal(r4, 0.6);
    CHECK(tape_grad_error(
              [](Tape& t, std::vector<ParamTensor*>& ps) {
                return t.bce_mean(t.sigmoid(t.param(*ps[0])), 1.0);
              },
              {&z}) < 1e-4);
  }
}

TEST_CASE("tape error paths") {
  Tape tape;
  Var c = tape.constant(Matrix::from({{1.0, 2.0}}));
  Var m = tape.mean_all(c);
  CHECK_THROWS_AS(tape.backward(m), StateError);  // no parameter dependency
  CHECK_THROWS_AS(tape.matmul(c, c), ShapeError);
  ParamTensor p("p", 1, 2);
  Var v = tape.param(p);
  CHECK_THROWS_AS(tape.cross_entropy_rows(v, {-1}, -1), ArgumentError);
}
