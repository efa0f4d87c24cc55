#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "provex/fixtures.hpp"
#include "provex/interval.hpp"
#include "provex/network.hpp"
#include "provex/random.hpp"

namespace provex::test {

inline constexpr double kSlack = 1e-9;

// Straight-line evaluator over plain loops; shares nothing with forward().
inline std::vector<double> naive_forward(const Network& net, const std::vector<double>& x) {
  std::vector<double> h = x;
  for (const DenseLayer& layer : net.layers()) {
    std::vector<double> next(layer.out(), 0.0);
    for (std::size_t i = 0; i < layer.out(); ++i) {
      double acc = layer.bias[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < layer.in(); ++j) {
        acc += layer.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * h[j];
      }
      switch (layer.activation) {
        case Activation::Relu: acc = acc > 0.0 ? acc : 0.0; break;
        case Activation::Sigmoid: acc = 1.0 / (1.0 + std::exp(-acc)); break;
        case Activation::Tanh: acc = std::tanh(acc); break;
        case Activation::Identity: break;
      }
      next[i] = acc;
    }
    h = std::move(next);
  }
  return h;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Random sub-box of `outer`.
inline IntervalVector random_box(const IntervalVector& outer, SplitMix64& rng) {
  Vector lo(outer.lo().size()), hi(outer.lo().size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    double a = rng.uniform(outer.lo()[i], outer.hi()[i]);
    double b = rng.uniform(outer.lo()[i], outer.hi()[i]);
    lo[i] = std::min(a, b);
    hi[i] = std::max(a, b);
  }
  return IntervalVector(lo, hi);
}

inline Vector random_point(const IntervalVector& box, SplitMix64& rng) {
  Vector p(box.lo().size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = rng.uniform(box.lo()[i], box.hi()[i]);
  return p;
}

// Small network: 1..3 hidden layers, widths up to `max_width`.
inline Network small_random_network(std::uint64_t seed, std::size_t inputs, std::size_t outputs,
                                    Activation act, std::size_t max_width = 12) {
  SplitMix64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
  const std::size_t depth = 1 + rng.below(3);
  std::vector<std::size_t> widths;
  for (std::size_t k = 0; k < depth; ++k) widths.push_back(2 + rng.below(max_width - 1));
  return random_network(inputs, widths, outputs, act, seed);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("provex_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Drops every key that measures wall time.
inline void strip_times(nlohmann::json& node) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end();) {
      if (it.key().find("seconds") != std::string::npos || it.key() == "wall_time") {
        it = node.erase(it);
      } else {
        strip_times(*it);
        ++it;
      }
    }
  } else if (node.is_array()) {
    for (auto& item : node) strip_times(item);
  }
}

}  // namespace provex::test
