#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mmda/discriminator.hpp"

using namespace mmda;
using namespace mmda::discriminator;
using numerics::idx;
using numerics::Matrix;
using numerics::Tape;
using numerics::Var;

namespace {

Matrix gaussian_features(idx rows, idx cols, double mean, Rng& rng) {
  Matrix m(rows, cols);
  for (idx i = 0; i < m.size(); ++i) m.data()[i] = mean + rng.normal();
  return m;
}

std::vector<Matrix> feature_set(std::size_t frames, idx rows, idx cols, double mean, Rng& rng) {
  std::vector<Matrix> out;
  out.reserve(frames);
  for (std::size_t i = 0; i < frames; ++i) out.push_back(gaussian_features(rows, cols, mean, rng));
  return out;
}

double held_out_accuracy(const std::vector<Matrix>& src, const std::vector<Matrix>& tgt,
                         DiscriminatorParams& d) {
  int correct = 0;
  for (const Matrix& m : src)
    if (score_features(m, d) < 0.5) ++correct;
  for (const Matrix& m : tgt)
    if (score_features(m, d) >= 0.5) ++correct;
  return static_cast<double>(correct) / static_cast<double>(src.size() + tgt.size());
}

}  // namespace

TEST_CASE("discriminate fixed points") {
  Rng prng(5);
  DiscriminatorParams d = DiscriminatorParams::init(6, 8, "d", prng);

  SUBCASE("all-zero weights and biases score 0.5 everywhere") {
    for (auto* p : d.all()) p->init_constant(0.0);
    Tape t;
    Var f2 = t.constant(Matrix::from({{1.0, -2.0, 0.5}, {0.1, 0.2, 0.3}}));
    Var f3 = t.constant(Matrix::from({{0.4, 0.5, 0.6}, {-1.0, 2.0, -3.0}}));
    Discrimination out = discriminate(t, f2, f3, d);
    CHECK(t.val(out.point_probs).rows() == 2);
    for (idx i = 0; i < 2; ++i) CHECK(t.val(out.point_probs)(i, 0) == 0.5);
    CHECK(t.scalar(out.frame_score) == 0.5);
  }

  SUBCASE("single point: frame score equals the point probability") {
    Tape t;
    Var f2 = t.constant(Matrix::from({{0.3, -0.8, 1.2}}));
    Var f3 = t.constant(Matrix::from({{0.9, 0.1, -0.4}}));
    Discrimination out = discriminate(t, f2, f3, d);
    CHECK(t.scalar(out.frame_score) == t.val(out.point_probs)(0, 0));
  }

  SUBCASE("raising the final bias raises the frame score") {
    Rng rng(6);
    Matrix feats = gaussian_features(5, 6, 0.0, rng);
    const double before = score_features(feats, d);
    d.l3_b.value[0] += 1.0;
    const double after = score_features(feats, d);
    CHECK(after > before);
  }

  SUBCASE("width mismatch is a shape error") {
    Tape t;
    Var f2 = t.constant(Matrix(2, 2));
    Var f3 = t.constant(Matrix(2, 2));
    CHECK_THROWS_AS(discriminate(t, f2, f3, d), ShapeError);
  }
}

TEST_CASE("bce_domain_loss worked values") {
  CHECK(bce_domain_loss({0.5, 0.5, 0.5}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_domain_loss({0.5}, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_domain_loss({1.0, 1.0}, 1) < 1e-6);   // clamped toward zero loss
  CHECK(bce_domain_loss({0.0}, 0) < 1e-6);
  CHECK(bce_domain_loss({0.25, 0.75}, 1) ==
        doctest::Approx((-std::log(0.25) - std::log(0.75)) / 2.0).epsilon(1e-12));
  CHECK(bce_domain_loss({0.25, 0.75}, 1) == doctest::Approx(0.8370).epsilon(1e-3));
  CHECK_THROWS_AS(bce_domain_loss({1.5}, 1), NumericError);
  CHECK_THROWS_AS(bce_domain_loss({-0.1}, 0), NumericError);
  CHECK_THROWS_AS(bce_domain_loss({0.5}, 2), ArgumentError);
  CHECK_THROWS_AS(bce_domain_loss({}, 0), ArgumentError);
}

TEST_CASE("training separates shifted feature domains") {
  Rng rng(11);
  const idx rows = 40;
  const idx width = 6;
  auto src_train = feature_set(30, rows, width, 0.0, rng);
  auto tgt_train = feature_set(30, rows, width, 1.5, rng);
  auto src_test = feature_set(25, rows, width, 0.0, rng);
  auto tgt_test = feature_set(25, rows, width, 1.5, rng);

  Rng prng(12);
  DiscriminatorParams d = DiscriminatorParams::init(static_cast<int>(width), 16, "d", prng);
  TrainDiscConfig cfg;
  cfg.iters = 300;
  DiscHistory hist = train_discriminator_cached(src_train, tgt_train, d, cfg, 99);
  CHECK(d.trained);
  CHECK(held_out_accuracy(src_test, tgt_test, d) >= 0.95);

  // 50-iteration moving average of the loss must not increase start-to-end.
  auto avg = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < from + 50; ++i) s += hist.loss[i];
    return s / 50.0;
  };
  CHECK(avg(hist.loss.size() - 50) <= avg(0));
}

TEST_CASE("identical distributions stay near chance level") {
  Rng rng(21);
  const idx rows = 40, width = 6;
  auto src_train = feature_set(30, rows, width, 0.0, rng);
  auto tgt_train = feature_set(30, rows, width, 0.0, rng);
  auto src_test = feature_set(30, rows, width, 0.0, rng);
  auto tgt_test = feature_set(30, rows, width, 0.0, rng);

  Rng prng(22);
  DiscriminatorParams d = DiscriminatorParams::init(static_cast<int>(width), 16, "d", prng);
  TrainDiscConfig cfg;
  cfg.iters = 300;
  train_discriminator_cached(src_train, tgt_train, d, cfg, 100);
  const double acc = held_out_accuracy(src_test, tgt_test, d);
  CHECK(acc >= 0.4);
  CHECK(acc <= 0.6);
}

TEST_CASE("same seed gives bitwise-identical trained parameters") {
  Rng rng(31);
  auto src = feature_set(10, 20, 4, 0.0, rng);
  auto tgt = feature_set(10, 20, 4, 0.8, rng);
  Rng prng(32);
  DiscriminatorParams d1 = DiscriminatorParams::init(4, 8, "d", prng);
  DiscriminatorParams d2 = d1;
  TrainDiscConfig cfg;
  cfg.iters = 60;
  train_discriminator_cached(src, tgt, d1, cfg, 7);
  train_discriminator_cached(src, tgt, d2, cfg, 7);
  for (std::size_t i = 0; i < d1.all().size(); ++i)
    CHECK(d1.all()[i]->value == d2.all()[i]->value);
}

TEST_CASE("empty domain is an argument error") {
  Rng prng(41);
  DiscriminatorParams d = DiscriminatorParams::init(4, 8, "d", prng);
  TrainDiscConfig cfg;
  std::vector<Matrix> some = {Matrix(5, 4)};
  std::vector<Matrix> none;
  CHECK_THROWS_AS(train_discriminator_cached(none, some, d, cfg, 1), ArgumentError);
  CHECK_THROWS_AS(train_discriminator_cached(some, none, d, cfg, 1), ArgumentError);
}

TEST_CASE("discriminator gradients pass the finite-difference check") {
  Rng rng(51);
  Matrix f2 = gaussian_features(4, 3, 0.0, rng);
  Matrix f3 = gaussian_features(4, 3, 0.3, rng);
  Rng prng(52);
  DiscriminatorParams d = DiscriminatorParams::init(6, 5, "d", prng);
  std::vector<numerics::ParamTensor*> ps = d.all();
  auto loss = [&]() {
    Tape t;
    Discrimination out = discriminate(t, t.constant(f2), t.constant(f3), d);
    Var l = t.bce_mean(out.point_probs, 1.0);
    t.backward(l);
    return t.scalar(l);
  };
  CHECK(numerics::grad_check(loss, ps, 1e-5) < 1e-4);
}
