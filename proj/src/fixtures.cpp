#include "provex/fixtures.hpp"

#include <cmath>
#include <string>

#include "provex/errors.hpp"
#include "provex/io.hpp"

namespace provex {

namespace {

constexpr std::uint64_t kInstanceStream = 0xA24BAED4963EE407ULL;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

Network running_example_network() {
  DenseLayer hidden;
  hidden.weights = Matrix{{2, 2, 1}, {2, 1, 2}, {1, 1, 5}};
  hidden.bias = Vector::Zero(3);
  hidden.activation = Activation::Relu;

  DenseLayer output;
  output.weights = Matrix{{2, 1, 1}, {1, 1, 5}};
  output.bias = Vector{{0.0, 10.0}};
  output.activation = Activation::Identity;
  return Network({std::move(hidden), std::move(output)});
}

Vector running_example_instance() { return Vector{{0.0, 1.0, 1.0}}; }

Network random_network(std::size_t inputs, const std::vector<std::size_t>& widths,
                       std::size_t outputs, Activation activation, std::uint64_t seed) {
  if (inputs == 0 || outputs == 0) throw ValidationError("random network needs inputs and outputs");
  SplitMix64 rng(seed);
  std::vector<DenseLayer> layers;
  std::size_t fan_in = inputs;
  auto add_layer = [&](std::size_t out, Activation act) {
    if (out == 0) throw ValidationError("random network: zero-width layer");
    DenseLayer layer;
    layer.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in));
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        layer.weights(i, j) = rng.uniform(-1.0, 1.0) * scale;
      }
    }
    layer.bias.resize(static_cast<Eigen::Index>(out));
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-0.1, 0.1);
    layer.activation = act;
    layers.push_back(std::move(layer));
    fan_in = out;
  };
  for (std::size_t w : widths) add_layer(w, activation);
  add_layer(outputs, Activation::Identity);
  return Network(std::move(layers));
}

std::vector<Vector> random_instances(std::size_t inputs, std::size_t count, std::uint64_t seed) {
  SplitMix64 rng(seed ^ kInstanceStream);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector x(static_cast<Eigen::Index>(inputs));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    out.push_back(std::move(x));
  }
  return out;
}

Network mnist_shape_network(std::uint64_t seed) {
  return random_network(784, std::vector<std::size_t>(7, 200), 10, Activation::Sigmoid, seed);
}

Fixture make_fixture(const FixtureSpec& spec) {
  return std::visit(
      Overloaded{
          [](const RunningExampleSpec&) {
            return Fixture{running_example_network(), {running_example_instance()}};
          },
          [](const RandomSpec& s) {
            return Fixture{random_network(s.inputs, s.widths, s.outputs, s.activation, s.seed),
                           random_instances(s.inputs, s.instances, s.seed)};
          },
          [](const MnistShapeSpec& s) {
            return Fixture{mnist_shape_network(s.seed), random_instances(784, s.instances, s.seed)};
          },
          [](const CustomSpec& s) {
            return Fixture{load_network_file(s.network), read_csv_instances(s.instances)};
          },
      },
      spec);
}

FixtureSpec fixture_spec_from_kind(std::string_view kind) {
  if (kind == "running-example" || kind == "running_example") return RunningExampleSpec{};
  if (kind == "random") return RandomSpec{};
  if (kind == "mnist-shape" || kind == "mnist_shape") return MnistShapeSpec{};
  if (kind == "custom") return CustomSpec{};
  throw ValidationError("unknown fixture kind '" + std::string(kind) +
                        "' (expected running-example, random, mnist-shape or custom)");
}

}  // namespace provex
