#include <cmath>
#include <limits>

#include "doctest.h"
#include "provex/errors.hpp"
#include "provex/interval.hpp"
#include "support/support.hpp"

using namespace provex;

TEST_CASE("interval rejects reversed and NaN endpoints") {
  CHECK_THROWS_AS(Interval(2.0, 1.0), ValidationError);
  CHECK_THROWS_AS(Interval(std::nan(""), 1.0), ValidationError);
  CHECK(Interval(1.0, 1.0).is_point());
  CHECK_THROWS_AS(IntervalVector(Vector{{0.0, 2.0}}, Vector{{1.0, 1.0}}), ValidationError);
}

TEST_CASE("iv_add endpoint addition") {
  CHECK(iv_add({{1, 2}}, {{3, 4}}) == IntervalVector{{4, 6}});
  CHECK(iv_add({{-1, 1}}, {{-1, 1}}) == IntervalVector{{-2, 2}});
  IntervalVector v{{0.5, 2}, {-3, -1}};
  CHECK(iv_add(v, IntervalVector(2)) == v);
  CHECK_THROWS_AS(iv_add(v, IntervalVector(3)), DimensionError);
}

TEST_CASE("iv_add commutes and associates to within an ulp") {
  SplitMix64 rng(5);
  const IntervalVector unit = IntervalVector::uniform(6, Interval(-10, 10));
  for (int trial = 0; trial < 200; ++trial) {
    IntervalVector a = test::random_box(unit, rng);
    IntervalVector b = test::random_box(unit, rng);
    IntervalVector c = test::random_box(unit, rng);
    CHECK(iv_add(a, b) == iv_add(b, a));
    IntervalVector left = iv_add(iv_add(a, b), c);
    IntervalVector right = iv_add(a, iv_add(b, c));
    for (std::size_t i = 0; i < 6; ++i) {
      const Eigen::Index k = static_cast<Eigen::Index>(i);
      CHECK(std::abs(left.lo()[k] - right.lo()[k]) <= 2 * std::numeric_limits<double>::epsilon() * 30);
      CHECK(std::abs(left.hi()[k] - right.hi()[k]) <= 2 * std::numeric_limits<double>::epsilon() * 30);
    }
  }
}

TEST_CASE("iv_affine on hidden and output rows of the toy network") {
  Matrix w1{{2, 2, 1}};
  CHECK(iv_affine(w1, IntervalVector(1), {{0, 1}, {1, 1}, {1, 1}}) == IntervalVector{{3, 5}});
  Matrix w2{{2, 1, 1}};
  CHECK(iv_affine(w2, IntervalVector(1), {{3, 5}, {3, 5}, {6, 7}}) == IntervalVector{{15, 22}});
}

TEST_CASE("iv_affine identity and errors") {
  IntervalVector v{{-1, 2}, {0.25, 0.5}};
  CHECK(iv_affine(Matrix::Identity(2, 2), IntervalVector(2), v) == v);
  CHECK_THROWS_AS(iv_affine(Matrix::Identity(3, 3), IntervalVector(3), v), DimensionError);
  CHECK_THROWS_AS(iv_affine(Matrix::Identity(2, 2), IntervalVector(3), v), DimensionError);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(iv_affine(bad, IntervalVector(2), v), ValidationError);
}

TEST_CASE("iv_affine encloses sampled images and matches the split form") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(6));
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(6));
    Matrix w(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) w(i, j) = rng.uniform(-3, 3);
    IntervalVector bias = test::random_box(IntervalVector::uniform(static_cast<std::size_t>(m), Interval(-1, 1)), rng);
    IntervalVector box = test::random_box(IntervalVector::uniform(static_cast<std::size_t>(n), Interval(-2, 2)), rng);
    const IntervalVector out = iv_affine(w, bias, box);
    for (int s = 0; s < 100; ++s) {
      const Vector p = test::random_point(box, rng);
      const Vector b = test::random_point(bias, rng);
      CHECK(out.contains(w * p + b, test::kSlack));
    }
    const IntervalVector split = SplitWeights(w).affine(bias, box);
    CHECK((split.lo() - out.lo()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((split.hi() - out.hi()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("iv_activation images") {
  CHECK(iv_activation(Activation::Relu, {{-2, 3}}) == IntervalVector{{0, 3}});
  CHECK(iv_activation(Activation::Sigmoid, {{0, 0}}) == IntervalVector{{0.5, 0.5}});
  IntervalVector v{{-1, 4}, {2, 2}};
  CHECK(iv_activation(Activation::Identity, v) == v);
  const IntervalVector t = iv_activation(Activation::Tanh, {{-0.3, 1.7}});
  CHECK(t.lo()[0] == doctest::Approx(std::tanh(-0.3)).epsilon(1e-15));
  CHECK(t.hi()[0] == doctest::Approx(std::tanh(1.7)).epsilon(1e-15));
  const IntervalVector s = iv_activation(Activation::Sigmoid, {{-40, 3}});
  CHECK(s.lo()[0] == doctest::Approx(1.0 / (1.0 + std::exp(40.0))).epsilon(1e-15));
  CHECK(s.hi()[0] == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(1e-15));
}

TEST_CASE("iv_subset") {
  CHECK(iv_subset({{1, 2}}, {{0, 3}}, 0.0));
  CHECK_FALSE(iv_subset({{0, 3}}, {{1, 2}}, 0.0));
  CHECK(iv_subset({{1, 2}}, {{1, 2}}, 0.0));
  CHECK(iv_subset({{1, 2.05}}, {{1, 2}}, 0.1));
  CHECK_THROWS_AS(iv_subset({{1, 2}}, {{1, 2}}, -1.0), ValidationError);
  CHECK_THROWS_AS(iv_subset({{1, 2}}, {{1, 2}, {0, 0}}, 0.0), DimensionError);
}
