#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "provex/activation.hpp"
#include "provex/interval.hpp"

namespace provex {

// Which hidden neurons were merged away, and against which bounds.
struct MergeSpec {
  // One sorted index set per hidden layer (original neuron numbering). The
  // output layer never appears.
  std::vector<std::vector<std::size_t>> per_layer_merged;
  std::size_t total_hidden = 0;
  std::uint64_t source_net_id = 0;
  // Fingerprint of the LayerBounds (network + input box) the merged neurons'
  // intervals were taken from.
  std::uint64_t query_fingerprint = 0;

  std::size_t merged_count() const;
  // Remaining hidden neurons / total hidden neurons; 1 when nothing is merged.
  double reduction_rate() const;

  friend bool operator==(const MergeSpec&, const MergeSpec&) = default;
};

struct AbstractLayer {
  Matrix weights;
  IntervalVector bias;
  Activation activation = Activation::Identity;
  // Original indices of the neurons this layer still computes.
  std::vector<std::size_t> kept;
  SplitWeights split;

  std::size_t in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out() const { return static_cast<std::size_t>(weights.rows()); }
};

// Reduced network with interval biases: H'_k = act(W'_k H'_{k-1} + b'_k).
// Its output on a box encloses the concrete network's output on any sub-box
// of `bounds_box`.
class AbstractNetwork {
 public:
  AbstractNetwork(std::vector<AbstractLayer> layers, MergeSpec spec, double rho,
                  IntervalVector bounds_box);

  std::size_t input_dim() const { return layers_.front().in(); }
  std::size_t output_dim() const { return layers_.back().out(); }
  const std::vector<AbstractLayer>& layers() const { return layers_; }
  const MergeSpec& spec() const { return spec_; }

  // Requested schedule level. The realised fraction is reduction_rate(),
  // which is floor-quantised to whole neurons.
  double rho() const { return rho_; }
  double reduction_rate() const { return spec_.reduction_rate(); }

  // Kept hidden neurons plus output neurons; the per-query cost unit.
  std::size_t neuron_count() const;
  const IntervalVector& bounds_box() const { return bounds_box_; }

 private:
  std::vector<AbstractLayer> layers_;
  MergeSpec spec_;
  double rho_ = 1.0;
  IntervalVector bounds_box_;
};

}  // namespace provex
