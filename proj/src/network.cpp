#include "provex/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "provex/errors.hpp"

namespace provex {

using nlohmann::json;

std::uint64_t hash_bytes(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_box(const IntervalVector& box, std::uint64_t seed) {
  std::uint64_t h = hash_bytes(box.lo().data(), sizeof(double) * box.size(), seed);
  return hash_bytes(box.hi().data(), sizeof(double) * box.size(), h);
}

namespace {

std::string layer_field(std::size_t k, const char* field) {
  return "layers[" + std::to_string(k) + "]." + field;
}

}  // namespace

Network::Network(std::vector<DenseLayer> layers)
    : Network(std::move(layers), IntervalVector{}) {}

Network::Network(std::vector<DenseLayer> layers, IntervalVector input_domain)
    : layers_(std::move(layers)), domain_(std::move(input_domain)) {
  if (layers_.empty()) throw ValidationError("network has no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& layer = layers_[k];
    if (layer.out() == 0 || layer.in() == 0) {
      throw ValidationError(layer_field(k, "weights") + ": empty matrix");
    }
    if (static_cast<std::size_t>(layer.bias.size()) != layer.out()) {
      throw DimensionError(layer_field(k, "bias") + ": expected " + std::to_string(layer.out()) +
                           " entries, got " + std::to_string(layer.bias.size()));
    }
    if (k > 0 && layer.in() != layers_[k - 1].out()) {
      throw DimensionError(layer_field(k, "weights") + ": expects " + std::to_string(layer.in()) +
                           " inputs but previous layer has " +
                           std::to_string(layers_[k - 1].out()) + " outputs");
    }
    if (!layer.weights.allFinite()) {
      throw ValidationError(layer_field(k, "weights") + ": non-finite entry");
    }
    if (!layer.bias.allFinite()) {
      throw ValidationError(layer_field(k, "bias") + ": non-finite entry");
    }
  }
  if (layers_.back().activation != Activation::Identity) {
    throw ValidationError(layer_field(layers_.size() - 1, "activation") +
                          ": the output layer must be linear");
  }
  if (domain_.size() == 0) {
    domain_ = IntervalVector::uniform(input_dim(), Interval(0.0, 1.0));
  } else if (domain_.size() != input_dim()) {
    throw DimensionError("input_domain: expected " + std::to_string(input_dim()) +
                         " entries, got " + std::to_string(domain_.size()));
  }
  if (!domain_.lo().allFinite() || !domain_.hi().allFinite()) {
    throw ValidationError("input_domain: non-finite bound");
  }

  split_.reserve(layers_.size());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const DenseLayer& layer : layers_) {
    split_.emplace_back(layer.weights);
    const std::uint64_t shape[3] = {layer.out(), layer.in(),
                                    static_cast<std::uint64_t>(layer.activation)};
    h = hash_bytes(shape, sizeof(shape), h);
    h = hash_bytes(layer.weights.data(), sizeof(double) * layer.weights.size(), h);
    h = hash_bytes(layer.bias.data(), sizeof(double) * layer.bias.size(), h);
  }
  fingerprint_ = hash_box(domain_, h);
}

std::size_t Network::hidden_neuron_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) n += layers_[k].out();
  return n;
}

std::size_t Network::neuron_count() const { return hidden_neuron_count() + output_dim(); }

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::vector<double> read_reals(const json& node, const std::string& field) {
  if (!node.is_array()) throw SchemaError(field + ": expected an array of numbers");
  std::vector<double> values;
  values.reserve(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_number()) {
      throw SchemaError(field + "[" + std::to_string(i) + "]: expected a number");
    }
    const double v = node[i].get<double>();
    if (!std::isfinite(v)) throw SchemaError(field + "[" + std::to_string(i) + "]: not finite");
    values.push_back(v);
  }
  return values;
}

Vector to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

const json& require(const json& node, const char* key, const std::string& where) {
  auto it = node.find(key);
  if (it == node.end()) {
    throw SchemaError((where.empty() ? std::string(key) : where + "." + key) + ": missing");
  }
  return *it;
}

}  // namespace

Network load_network(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network document: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("network document: expected an object");

  const json& input_dim_node = require(doc, "input_dim", "");
  if (!input_dim_node.is_number_integer() || input_dim_node.get<long long>() <= 0) {
    throw SchemaError("input_dim: expected a positive integer");
  }
  const auto input_dim = input_dim_node.get<std::size_t>();

  IntervalVector domain;
  if (auto it = doc.find("input_domain"); it != doc.end()) {
    if (!it->is_object()) throw SchemaError("input_domain: expected an object");
    const std::vector<double> lo = read_reals(require(*it, "lo", "input_domain"), "input_domain.lo");
    const std::vector<double> hi = read_reals(require(*it, "hi", "input_domain"), "input_domain.hi");
    if (lo.size() != input_dim || hi.size() != input_dim) {
      throw SchemaError("input_domain: expected " + std::to_string(input_dim) + " bounds");
    }
    try {
      domain = IntervalVector(to_vector(lo), to_vector(hi));
    } catch (const ValidationError&) {
      throw SchemaError("input_domain: lo exceeds hi");
    }
  }

  const json& layers_node = require(doc, "layers", "");
  if (!layers_node.is_array() || layers_node.empty()) {
    throw SchemaError("layers: expected a non-empty array");
  }

  std::vector<DenseLayer> layers;
  std::size_t fan_in = input_dim;
  for (std::size_t k = 0; k < layers_node.size(); ++k) {
    const json& node = layers_node[k];
    const std::string where = "layers[" + std::to_string(k) + "]";
    if (!node.is_object()) throw SchemaError(where + ": expected an object");

    const std::string kind = node.value("kind", std::string("dense"));
    if (kind != "dense") {
      throw SchemaError(where + ".kind: unsupported layer kind '" + kind + "'");
    }

    const json& act_node = require(node, "activation", where);
    if (!act_node.is_string()) throw SchemaError(where + ".activation: expected a string");
    const auto act_name = act_node.get<std::string>();
    const bool last = k + 1 == layers_node.size();
    Activation activation = Activation::Identity;
    if (act_name == "softmax") {
      if (!last) throw SchemaError(where + ".activation: softmax only allowed on the output layer");
    } else {
      try {
        activation = parse_activation(act_name);
      } catch (const ValidationError&) {
        throw SchemaError(where + ".activation: unsupported activation '" + act_name + "'");
      }
    }
    if (last && activation != Activation::Identity) {
      throw SchemaError(where + ".activation: the output layer must be identity or softmax");
    }

    const json& rows = require(node, "weights", where);
    if (!rows.is_array() || rows.empty()) {
      throw SchemaError(where + ".weights: expected a non-empty array of rows");
    }
    Matrix weights(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fan_in));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string row_field = where + ".weights[" + std::to_string(i) + "]";
      const std::vector<double> row = read_reals(rows[i], row_field);
      if (row.size() != fan_in) {
        throw SchemaError(row_field + ": expected " + std::to_string(fan_in) + " entries, got " +
                          std::to_string(row.size()));
      }
      for (std::size_t j = 0; j < fan_in; ++j) {
        weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
      }
    }

    const std::vector<double> bias = read_reals(require(node, "bias", where), where + ".bias");
    if (bias.size() != rows.size()) {
      throw SchemaError(where + ".bias: expected " + std::to_string(rows.size()) +
                        " entries, got " + std::to_string(bias.size()));
    }
    layers.push_back(DenseLayer{std::move(weights), to_vector(bias), activation});
    fan_in = rows.size();
  }

  return Network(std::move(layers), std::move(domain));
}

Network load_network_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open network file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_network(buffer.str());
}

json network_to_json(const Network& net) {
  json doc;
  doc["input_dim"] = net.input_dim();
  const IntervalVector& domain = net.input_domain();
  doc["input_domain"] = {
      {"lo", std::vector<double>(domain.lo().data(), domain.lo().data() + domain.size())},
      {"hi", std::vector<double>(domain.hi().data(), domain.hi().data() + domain.size())}};
  json layers = json::array();
  for (const DenseLayer& layer : net.layers()) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) row.push_back(layer.weights(i, j));
      rows.push_back(std::move(row));
    }
    layers.push_back({{"kind", "dense"},
                      {"activation", std::string(to_string(layer.activation))},
                      {"weights", std::move(rows)},
                      {"bias", std::vector<double>(layer.bias.data(),
                                                   layer.bias.data() + layer.bias.size())}});
  }
  doc["layers"] = std::move(layers);
  return doc;
}

std::string save_network(const Network& net) { return network_to_json(net).dump(); }

void save_network_file(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write network file " + path.string());
  out << save_network(net) << '\n';
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

void require_input(const Network& net, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw DimensionError("input has " + std::to_string(x.size()) + " entries, network expects " +
                         std::to_string(net.input_dim()));
  }
}

}  // namespace

std::vector<Vector> forward_layers(const Network& net, const Vector& x) {
  require_input(net, x);
  std::vector<Vector> values;
  values.reserve(net.layer_count());
  const Vector* h = &x;
  for (const DenseLayer& layer : net.layers()) {
    Vector z = layer.weights * *h + layer.bias;
    if (layer.activation != Activation::Identity) {
      z = z.unaryExpr([&](double v) { return apply(layer.activation, v); });
    }
    values.push_back(std::move(z));
    h = &values.back();
  }
  return values;
}

Vector forward(const Network& net, const Vector& x) { return forward_layers(net, x).back(); }

std::size_t argmax(const Vector& values) {
  if (values.size() == 0) throw DimensionError("argmax of an empty vector");
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

std::size_t predict(const Network& net, const Vector& x) { return argmax(forward(net, x)); }

Vector gradient(const Network& net, const Vector& x, const Vector& output_weights) {
  require_input(net, x);
  if (static_cast<std::size_t>(output_weights.size()) != net.output_dim()) {
    throw DimensionError("output cotangent has " + std::to_string(output_weights.size()) +
                         " entries, network has " + std::to_string(net.output_dim()) +
                         " outputs");
  }
  // Forward pass keeping pre-activations.
  std::vector<Vector> pre;
  pre.reserve(net.layer_count());
  Vector h = x;
  for (const DenseLayer& layer : net.layers()) {
    pre.push_back(layer.weights * h + layer.bias);
    h = pre.back().unaryExpr([&](double v) { return apply(layer.activation, v); });
  }
  Vector delta = output_weights;
  for (std::size_t k = net.layer_count(); k-- > 0;) {
    const DenseLayer& layer = net.layer(k);
    if (layer.activation != Activation::Identity) {
      const Vector& z = pre[k];
      for (Eigen::Index i = 0; i < delta.size(); ++i) {
        delta[i] *= derivative(layer.activation, z[i]);
      }
    }
    delta = layer.weights.transpose() * delta;
  }
  return delta;
}

Vector gradient(const Network& net, const Vector& x, std::size_t out_index) {
  if (out_index >= net.output_dim()) {
    throw DimensionError("output index " + std::to_string(out_index) + " out of range");
  }
  Vector seed = Vector::Zero(static_cast<Eigen::Index>(net.output_dim()));
  seed[static_cast<Eigen::Index>(out_index)] = 1.0;
  return gradient(net, x, seed);
}

}  // namespace provex
