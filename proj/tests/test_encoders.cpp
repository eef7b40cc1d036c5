#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "mmda/encoders.hpp"

using namespace mmda;
using namespace mmda::encoders;
using numerics::idx;
using numerics::Matrix;
using numerics::ParamTensor;
using numerics::Tape;
using numerics::Var;

namespace {

std::vector<double> random_image(int h, int w, Rng& rng) {
  std::vector<double> img(static_cast<std::size_t>(h) * w * 3);
  for (double& v : img) v = rng.uniform();
  return img;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("project_points pinhole examples") {
  Calibration calib;
  calib.fx = 100.0;
  calib.fy = 100.0;
  calib.cx = 50.0;
  calib.cy = 50.0;

  SUBCASE("optical axis lands on the principal point") {
    Projection p = project_points({{0.0, 0.0, 5.0}}, calib, 128, 128);
    REQUIRE(p.kept.size() == 1);
    CHECK(p.u[0] == doctest::Approx(50.0));
    CHECK(p.v[0] == doctest::Approx(50.0));
  }

  SUBCASE("points behind the camera are dropped") {
    Projection p = project_points({{0.0, 0.0, 5.0}, {0.1, 0.1, -1.0}}, calib, 128, 128);
    REQUIRE(p.kept.size() == 1);
    CHECK(p.kept[0] == 0);
  }

  SUBCASE("worked pinhole formula") {
    Projection p = project_points({{1.0, 2.0, 10.0}}, calib, 128, 128);
    REQUIRE(p.kept.size() == 1);
    CHECK(p.u[0] == doctest::Approx(60.0));
    CHECK(p.v[0] == doctest::Approx(70.0));
  }

  SUBCASE("kept indices strictly increasing") {
    Rng rng(1);
    std::vector<std::array<double, 3>> pts;
    for (int i = 0; i < 200; ++i)
      pts.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-2, 12)});
    Projection p = project_points(pts, calib, 128, 128);
    REQUIRE(p.kept.size() > 1);
    for (std::size_t i = 1; i < p.kept.size(); ++i) CHECK(p.kept[i] > p.kept[i - 1]);
  }

  SUBCASE("no point projecting is an error") {
    CHECK_THROWS_AS(project_points({{0.0, 0.0, -5.0}}, calib, 128, 128), EmptyProjectionError);
  }

  SUBCASE("invalid calibration is rejected") {
    Calibration bad = calib;
    bad.fx = 0.0;
    CHECK_THROWS_AS(project_points({{0.0, 0.0, 5.0}}, bad, 128, 128), ArgumentError);
    Calibration skewed = calib;
    skewed.rot = {1, 0.2, 0, 0, 1, 0, 0, 0, 1};
    CHECK_THROWS_AS(project_points({{0.0, 0.0, 5.0}}, skewed, 128, 128), ArgumentError);
  }

  SUBCASE("pose is applied before projection") {
    Calibration posed = calib;
    posed.rot = {-1, 0, 0, 0, 1, 0, 0, 0, -1};  // 180 degrees about y
    Projection p = project_points({{0.0, 0.0, -5.0}}, posed, 128, 128);
    REQUIRE(p.kept.size() == 1);
    CHECK(p.u[0] == doctest::Approx(50.0));
  }
}

TEST_CASE("encode_2d contract") {
  const int h = 8, w = 8, f = 4;
  Rng rng(21);
  Rng prng(22);
  Encoder2dParams params = Encoder2dParams::init(f, prng);
  std::vector<double> img = random_image(h, w, rng);
  std::vector<double> us = {0.5, 3.2, 7.9};
  std::vector<double> vs = {1.5, 0.0, 6.3};

  SUBCASE("deterministic and shaped N x F") {
    Tape t1, t2;
    Var a = encode_2d(t1, img, h, w, us, vs, params);
    Var b = encode_2d(t2, img, h, w, us, vs, params);
    CHECK(t1.val(a).rows() == 3);
    CHECK(t1.val(a).cols() == f);
    CHECK(bitwise_equal(t1.val(a), t2.val(b)));
  }

  SUBCASE("all-zero image with zero biases gives all-zero features") {
    std::vector<double> zeros(img.size(), 0.0);
    Tape t;
    Var out = encode_2d(t, zeros, h, w, us, vs, params);
    for (idx i = 0; i < t.val(out).size(); ++i) CHECK(t.val(out).data()[i] == 0.0);
  }

  SUBCASE("coordinates outside the image are a bounds error") {
    Tape t;
    CHECK_THROWS_AS(encode_2d(t, img, h, w, {8.0}, {1.0}, params), ArgumentError);
    CHECK_THROWS_AS(encode_2d(t, img, h, w, {-0.1}, {1.0}, params), ArgumentError);
  }
}

TEST_CASE("encode_3d contract") {
  const int f = 4;
  Rng prng(31);
  Encoder3dParams params = Encoder3dParams::init(f, prng);
  std::vector<std::array<double, 3>> pts = {
      {0.3, -0.2, 2.0}, {1.0, 0.4, 5.0}, {-0.8, 0.9, 3.3}, {0.0, 0.0, 1.0}};

  SUBCASE("permutation equivariance") {
    Tape t1;
    Matrix base = t1.val(encode_3d(t1, pts, params));
    std::vector<std::array<double, 3>> perm = {pts[2], pts[0], pts[3], pts[1]};
    Tape t2;
    Matrix permuted = t2.val(encode_3d(t2, perm, params));
    const int mapping[4] = {2, 0, 3, 1};
    // The pooled mean is summed in row order, so equality holds to rounding.
    for (int r = 0; r < 4; ++r)
      for (idx c = 0; c < f; ++c)
        CHECK(permuted(r, c) == doctest::Approx(base(mapping[r], c)).epsilon(1e-12));
  }

  SUBCASE("single point pools to itself") {
    Tape t1;
    Matrix one = t1.val(encode_3d(t1, {pts[0]}, params));
    // With N=1 the pooled embedding equals the point's own, so duplicating
    // the point must reproduce the same row twice.
    Tape t2;
    Matrix two = t2.val(encode_3d(t2, {pts[0], pts[0]}, params));
    for (idx c = 0; c < f; ++c) {
      CHECK(two(0, c) == one(0, c));
      CHECK(two(1, c) == one(0, c));
    }
  }

  SUBCASE("deterministic") {
    Tape t1, t2;
    CHECK(bitwise_equal(t1.val(encode_3d(t1, pts, params)),
                        t2.val(encode_3d(t2, pts, params))));
  }
}

TEST_CASE("segment contract") {
  const int f = 3, c = 3;
  Rng prng(41);
  HeadParams head = HeadParams::init(f, c, "head", prng);

  SUBCASE("zero features and zero weights leave the bias") {
    HeadParams zero = HeadParams::init(f, c, "zero", prng);
    zero.w.init_constant(0.0);
    zero.b.value = {0.1, -0.4, 2.0};
    Tape t;
    Var feats = t.constant(Matrix(4, f));
    Matrix logits = t.val(segment(t, feats, zero));
    CHECK(logits.rows() == 4);
    CHECK(logits.cols() == c);
    for (idx r = 0; r < 4; ++r) {
      CHECK(logits(r, 0) == 0.1);
      CHECK(logits(r, 1) == -0.4);
      CHECK(logits(r, 2) == 2.0);
    }
  }

  SUBCASE("identity head reproduces one-hot features") {
    HeadParams id_head = HeadParams::init(f, c, "id", prng);
    id_head.w.value = Matrix::identity(f).values();
    id_head.b.init_constant(0.0);
    Tape t;
    Var feats = t.constant(Matrix::identity(f));
    Matrix logits = t.val(segment(t, feats, id_head));
    for (idx r = 0; r < f; ++r)
      for (idx col = 0; col < c; ++col) CHECK(logits(r, col) == (r == col ? 1.0 : 0.0));
  }

  SUBCASE("width mismatch is a shape error") {
    Tape t;
    Var feats = t.constant(Matrix(2, f + 1));
    CHECK_THROWS_AS(segment(t, feats, head), ShapeError);
  }
}

TEST_CASE("encoder gradients pass the finite-difference check") {
  const int h = 6, w = 5, f = 3, c = 3;
  Rng rng(51);
  std::vector<double> img = random_image(h, w, rng);
  std::vector<double> us = {0.5, 2.7, 4.1, 1.0};
  std::vector<double> vs = {1.2, 4.9, 0.3, 5.5};
  std::vector<std::array<double, 3>> pts = {
      {0.3, -0.2, 2.0}, {1.0, 0.4, 5.0}, {-0.8, 0.9, 3.3}, {0.2, 0.1, 4.0}};
  std::vector<int> labels = {0, 2, 1, 0};

  Rng prng(52);
  Encoder2dParams e2 = Encoder2dParams::init(f, prng);
  Encoder3dParams e3 = Encoder3dParams::init(f, prng);
  HeadParams h2 = HeadParams::init(f, c, "h2", prng);
  HeadParams h3 = HeadParams::init(f, c, "h3", prng);

  std::vector<ParamTensor*> params;
  for (auto* p : e2.all()) params.push_back(p);
  for (auto* p : e3.all()) params.push_back(p);
  for (auto* p : h2.all()) params.push_back(p);
  for (auto* p : h3.all()) params.push_back(p);

  auto loss = [&]() {
    Tape t;
    Var f2d = encode_2d(t, img, h, w, us, vs, e2);
    Var f3d = encode_3d(t, pts, e3);
    Var l2 = t.cross_entropy_rows(segment(t, f2d, h2), labels, -1);
    Var l3 = t.cross_entropy_rows(segment(t, f3d, h3), labels, -1);
    Var total = t.add(l2, l3);
    t.backward(total);
    return t.scalar(total);
  };
  CHECK(numerics::grad_check(loss, params, 1e-5) < 1e-4);
}
