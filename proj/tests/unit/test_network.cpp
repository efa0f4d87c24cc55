#include <cmath>
#include <string>

#include "doctest.h"
#include "provex/bounds.hpp"
#include "provex/errors.hpp"
#include "provex/fixtures.hpp"
#include "provex/network.hpp"
#include "support/support.hpp"

using namespace provex;

namespace {

const char* kIdentityDoc = R"({"input_dim": 2, "layers": [
  {"kind": "dense", "activation": "identity", "weights": [[1, 0], [0, 1]], "bias": [0, 0]}]})";

}  // namespace

TEST_CASE("identity document computes f(x) = x") {
  const Network net = load_network(kIdentityDoc);
  const Vector x{{0.3, 0.9}};
  CHECK(forward(net, x) == x);
  CHECK(net.input_domain() == IntervalVector({{0, 1}, {0, 1}}));
}

TEST_CASE("toy network forward and prediction") {
  const Network net = running_example_network();
  CHECK(forward(net, Vector{{0, 1, 1}}) == Vector{{15, 46}});
  CHECK(predict(net, Vector{{0, 1, 1}}) == 1);
}

TEST_CASE("loader errors name the field") {
  const std::string bad_bias = R"({"input_dim": 2, "layers": [
    {"kind": "dense", "activation": "identity", "weights": [[1, 0], [0, 1]], "bias": [0]}]})";
  try {
    load_network(bad_bias);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("layers[0].bias") != std::string::npos);
  }
  CHECK_THROWS_AS(load_network("{not json"), ParseError);
  CHECK_THROWS_AS(load_network(R"({"layers": []})"), SchemaError);
  CHECK_THROWS_AS(load_network(R"({"input_dim": 2, "layers": [
    {"kind": "dense", "activation": "relu", "weights": [[1, 0]], "bias": [0]}]})"),
                  SchemaError);
  CHECK_THROWS_AS(load_network(R"({"input_dim": 2, "layers": [
    {"kind": "conv", "activation": "identity", "weights": [[1, 0]], "bias": [0]}]})"),
                  SchemaError);
  CHECK_THROWS_AS(load_network(R"({"input_dim": 2, "layers": [
    {"kind": "dense", "activation": "identity", "weights": [[1, 0, 3]], "bias": [0]}]})"),
                  SchemaError);
}

TEST_CASE("softmax head is stripped, hidden softmax rejected") {
  const Network net = load_network(R"({"input_dim": 1, "layers": [
    {"kind": "dense", "activation": "softmax", "weights": [[1], [-1]], "bias": [0, 0]}]})");
  CHECK(net.layer(0).activation == Activation::Identity);
  CHECK_THROWS_AS(load_network(R"({"input_dim": 1, "layers": [
    {"kind": "dense", "activation": "softmax", "weights": [[1]], "bias": [0]},
    {"kind": "dense", "activation": "identity", "weights": [[1]], "bias": [0]}]})"),
                  SchemaError);
}

TEST_CASE("forward agrees with a naive evaluator") {
  SplitMix64 rng(3);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Activation act = seed % 3 == 0 ? Activation::Relu : seed % 3 == 1 ? Activation::Sigmoid : Activation::Tanh;
    const Network net = random_network(5, {7, 6}, 4, act, seed);
    for (int s = 0; s < 20; ++s) {
      const Vector x = test::random_point(net.input_domain(), rng);
      const Vector got = forward(net, x);
      const std::vector<double> want = test::naive_forward(net, test::to_std(x));
      for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(std::abs(got[static_cast<Eigen::Index>(i)] - want[i]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax(Vector{{5, 5}}) == 0);
  CHECK(argmax(Vector{{1, 7, 7}}) == 1);
  const Network one = load_network(R"({"input_dim": 1, "layers": [
    {"kind": "dense", "activation": "identity", "weights": [[2]], "bias": [1]}]})");
  CHECK(predict(one, Vector{{0.4}}) == 0);
}

TEST_CASE("gradient of linear maps") {
  const Network net = load_network(kIdentityDoc);
  CHECK(gradient(net, Vector{{0.2, 0.7}}, std::size_t{0}) == Vector{{1, 0}});

  // ReLU layer followed by a unit readout: at positive pre-activations the
  // gradient is the weight row.
  std::vector<DenseLayer> layers(2);
  layers[0].weights = Matrix{{0.5, -0.25, 2.0}};
  layers[0].bias = Vector{{1.0}};
  layers[0].activation = Activation::Relu;
  layers[1].weights = Matrix{{1.0}};
  layers[1].bias = Vector{{0.0}};
  const Network relu(std::move(layers));
  CHECK(gradient(relu, Vector{{0.5, 0.5, 0.5}}, std::size_t{0}) == Vector{{0.5, -0.25, 2.0}});
}

TEST_CASE("gradient matches central differences on sigmoid networks") {
  SplitMix64 rng(9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Network net = random_network(6, {8, 5}, 3, Activation::Sigmoid, seed);
    const Vector x = test::random_point(IntervalVector::uniform(6, Interval(0.1, 0.9)), rng);
    for (std::size_t out = 0; out < 3; ++out) {
      const Vector g = gradient(net, x, out);
      for (Eigen::Index i = 0; i < 6; ++i) {
        const double h = 1e-5;
        Vector up = x, down = x;
        up[i] += h;
        down[i] -= h;
        const double fd = (forward(net, up)[static_cast<Eigen::Index>(out)] -
                           forward(net, down)[static_cast<Eigen::Index>(out)]) / (2 * h);
        CHECK(std::abs(fd - g[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("save and load round-trip bit-identically") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network net = random_network(4, {6, 3}, 2, Activation::Tanh, seed);
    const Network back = load_network(save_network(net));
    CHECK(back.fingerprint() == net.fingerprint());
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
      CHECK(back.layer(k).weights == net.layer(k).weights);
      CHECK(back.layer(k).bias == net.layer(k).bias);
    }
    CHECK(save_network(back) == save_network(net));
  }
}

TEST_CASE("a constant shift of every logit keeps the prediction") {
  SplitMix64 rng(2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Network net = random_network(4, {5}, 3, Activation::Relu, seed);
    std::vector<DenseLayer> layers = net.layers();
    DenseLayer shift;
    shift.weights = Matrix::Identity(3, 3);
    shift.bias = Vector::Constant(3, rng.uniform(-5, 5));
    layers.push_back(shift);
    const Network shifted(std::move(layers));
    for (int s = 0; s < 20; ++s) {
      const Vector x = test::random_point(net.input_domain(), rng);
      CHECK(predict(net, x) == predict(shifted, x));
    }
  }
}

TEST_CASE("forward lies in the point-box enclosure") {
  SplitMix64 rng(4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Network net = random_network(5, {6, 6}, 3, Activation::Sigmoid, seed);
    const Vector x = test::random_point(net.input_domain(), rng);
    CHECK(propagate_box(net, IntervalVector::point(x)).output().contains(forward(net, x), test::kSlack));
  }
}

TEST_CASE("dimension errors") {
  const Network net = running_example_network();
  CHECK_THROWS_AS(forward(net, Vector{{1, 2}}), DimensionError);
  CHECK_THROWS_AS(gradient(net, Vector{{0, 1, 1}}, std::size_t{5}), DimensionError);
}
