#pragma once

#include <string>
#include <string_view>

namespace provex {

// All supported activations are monotone nondecreasing, which is what makes
// endpoint evaluation an exact interval image.
enum class Activation { Relu, Sigmoid, Tanh, Identity };

double apply(Activation kind, double value);

// Derivative expressed in terms of the pre-activation value. ReLU at exactly
// zero uses the subgradient 0.
double derivative(Activation kind, double pre_activation);

std::string_view to_string(Activation kind);

// Throws ValidationError on unknown names. "softmax" is not accepted here;
// the network loader handles it.
Activation parse_activation(std::string_view name);

}  // namespace provex
