#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <variant>
#include <vector>

#include "provex/activation.hpp"
#include "provex/network.hpp"
#include "provex/random.hpp"

namespace provex {

struct RunningExampleSpec {};

struct RandomSpec {
  std::size_t inputs = 4;
  std::vector<std::size_t> widths{8, 8};
  std::size_t outputs = 3;
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;
  std::size_t instances = 1;
};

// 784 -> 7 x 200 sigmoid -> 10, random weights.
struct MnistShapeSpec {
  std::uint64_t seed = 0;
  std::size_t instances = 1;
};

struct CustomSpec {
  std::filesystem::path network;
  std::filesystem::path instances;  // CSV, one instance per row
};

using FixtureSpec = std::variant<RunningExampleSpec, RandomSpec, MnistShapeSpec, CustomSpec>;

struct Fixture {
  Network network;
  std::vector<Vector> instances;
};

Fixture make_fixture(const FixtureSpec& spec);

// Throws ValidationError naming the kind when it is not one of
// running-example, random, mnist-shape, custom.
FixtureSpec fixture_spec_from_kind(std::string_view kind);

// Toy ReLU network with non-negative weights: three inputs, three hidden
// neurons, two outputs. Hidden rows (2,2,1), (2,1,2), (1,1,5); output rows
// (2,1,1) and (1,1,5) with bias (0, 10). Only the first hidden row, the first
// output row and the output bias are given outright; the remaining entries
// are one completion consistent with f(0,1,1) = (15, 46), hidden bounds
// ([3,5],[3,5],[6,7]) and outputs ([15,22],[46,55]) when features 2 and 3
// are fixed. Other completions exist, e.g. (p, 2-p, 5) for the second output
// row.
Network running_example_network();
Vector running_example_instance();

// Weights uniform in [-1, 1] / sqrt(fan_in), biases uniform in [-0.1, 0.1];
// linear output layer.
Network random_network(std::size_t inputs, const std::vector<std::size_t>& widths,
                       std::size_t outputs, Activation activation, std::uint64_t seed);

// Uniform points of the unit box.
std::vector<Vector> random_instances(std::size_t inputs, std::size_t count, std::uint64_t seed);

Network mnist_shape_network(std::uint64_t seed);

}  // namespace provex
