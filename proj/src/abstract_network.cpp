#include "provex/abstract_network.hpp"

#include <string>

#include "provex/errors.hpp"

namespace provex {

std::size_t MergeSpec::merged_count() const {
  std::size_t n = 0;
  for (const auto& layer : per_layer_merged) n += layer.size();
  return n;
}

double MergeSpec::reduction_rate() const {
  if (total_hidden == 0) return 1.0;
  return static_cast<double>(total_hidden - merged_count()) / static_cast<double>(total_hidden);
}

AbstractNetwork::AbstractNetwork(std::vector<AbstractLayer> layers, MergeSpec spec, double rho,
                                 IntervalVector bounds_box)
    : layers_(std::move(layers)),
      spec_(std::move(spec)),
      rho_(rho),
      bounds_box_(std::move(bounds_box)) {
  if (layers_.empty()) throw ValidationError("abstract network has no layers");
  if (!(rho_ > 0.0 && rho_ <= 1.0)) throw ValidationError("rho out of range (0, 1]");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    AbstractLayer& layer = layers_[k];
    const std::string where = "abstract layer " + std::to_string(k);
    if (layer.bias.size() != layer.out()) throw DimensionError(where + ": bias length mismatch");
    if (layer.kept.size() != layer.out()) throw DimensionError(where + ": kept list mismatch");
    if (k > 0 && layer.in() != layers_[k - 1].out()) {
      throw DimensionError(where + ": input width does not chain");
    }
    layer.split = SplitWeights(layer.weights);
  }
  if (bounds_box_.size() != input_dim()) {
    throw DimensionError("abstract network bounds box has the wrong length");
  }
}

std::size_t AbstractNetwork::neuron_count() const {
  std::size_t n = 0;
  for (const AbstractLayer& layer : layers_) n += layer.out();
  return n;
}

}  // namespace provex
