#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "provex/activation.hpp"
#include "provex/interval.hpp"

namespace provex {

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::Identity;

  std::size_t in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out() const { return static_cast<std::size_t>(weights.rows()); }
};

// Feed-forward network h_k = act_k(W_k h_{k-1} + b_k) over a bounded input
// domain. Immutable after construction; the last layer produces logits.
class Network {
 public:
  // Validates the shape chain, finiteness, and that the last layer is linear.
  // The default domain is the unit box.
  explicit Network(std::vector<DenseLayer> layers);
  Network(std::vector<DenseLayer> layers, IntervalVector input_domain);

  std::size_t input_dim() const { return layers_.front().in(); }
  std::size_t output_dim() const { return layers_.back().out(); }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t hidden_layer_count() const { return layers_.size() - 1; }
  std::size_t hidden_neuron_count() const;
  std::size_t neuron_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  const DenseLayer& layer(std::size_t k) const { return layers_.at(k); }
  const SplitWeights& split(std::size_t k) const { return split_.at(k); }
  const IntervalVector& input_domain() const { return domain_; }

  // Hash over every stored parameter; identifies the network in LayerBounds
  // and merge specs.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::vector<DenseLayer> layers_;
  std::vector<SplitWeights> split_;
  IntervalVector domain_;
  std::uint64_t fingerprint_ = 0;
};

// JSON document:
// {"input_dim": n, "input_domain": {"lo": [...], "hi": [...]},
//  "layers": [{"kind": "dense", "activation": "relu|sigmoid|tanh|identity",
//              "weights": [[...], ...], "bias": [...]}]}
// A trailing "softmax" activation is stripped to identity (argmax-invariant).
Network load_network(std::string_view document);
Network load_network_file(const std::filesystem::path& path);
nlohmann::json network_to_json(const Network& net);
std::string save_network(const Network& net);
void save_network_file(const Network& net, const std::filesystem::path& path);

Vector forward(const Network& net, const Vector& x);

// Post-activation values of every layer; the last entry equals forward(x).
std::vector<Vector> forward_layers(const Network& net, const Vector& x);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(const Vector& values);
std::size_t predict(const Network& net, const Vector& x);

// d logit[out_index] / dx by reverse mode.
Vector gradient(const Network& net, const Vector& x, std::size_t out_index);

// d (c . logits) / dx for an arbitrary output cotangent c.
Vector gradient(const Network& net, const Vector& x, const Vector& output_weights);

// FNV-1a over raw bytes; shared by every fingerprint in the library.
std::uint64_t hash_bytes(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_box(const IntervalVector& box, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace provex
