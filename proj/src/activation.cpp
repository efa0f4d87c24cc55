#include "provex/activation.hpp"

#include <cmath>
#include <string>

#include "provex/errors.hpp"

namespace provex {

namespace {

double sigmoid(double v) {
  if (v >= 0.0) {
    return 1.0 / (1.0 + std::exp(-v));
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

double apply(Activation kind, double value) {
  switch (kind) {
    case Activation::Relu:
      return value > 0.0 ? value : 0.0;
    case Activation::Sigmoid:
      return sigmoid(value);
    case Activation::Tanh:
      return std::tanh(value);
    case Activation::Identity:
      return value;
  }
  throw ValidationError("unsupported activation");
}

double derivative(Activation kind, double pre_activation) {
  switch (kind) {
    case Activation::Relu:
      return pre_activation > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = sigmoid(pre_activation);
      return s * (1.0 - s);
    }
    case Activation::Tanh: {
      const double t = std::tanh(pre_activation);
      return 1.0 - t * t;
    }
    case Activation::Identity:
      return 1.0;
  }
  throw ValidationError("unsupported activation");
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::Relu:
      return "relu";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Tanh:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity" || name == "linear") return Activation::Identity;
  throw ValidationError("unsupported activation '" + std::string(name) + "'");
}

}  // namespace provex
