#include "provex/bounds.hpp"

#include <string>

#include "provex/errors.hpp"

namespace provex {

std::uint64_t LayerBounds::fingerprint() const { return hash_box(input_box, network_id); }

LayerBounds propagate_box(const Network& net, const IntervalVector& box) {
  if (box.size() != net.input_dim()) {
    throw DimensionError("input box has " + std::to_string(box.size()) +
                         " entries, network expects " + std::to_string(net.input_dim()));
  }
  if (!iv_subset(box, net.input_domain())) {
    throw ValidationError("input box leaves the network's input domain");
  }
  LayerBounds lb;
  lb.input_box = box;
  lb.network_id = net.fingerprint();
  lb.per_layer.reserve(net.layer_count());
  const IntervalVector* h = &lb.input_box;
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const DenseLayer& layer = net.layer(k);
    IntervalVector pre = net.split(k).affine(IntervalVector::point(layer.bias), *h);
    lb.per_layer.push_back(iv_activation(layer.activation, pre));
    h = &lb.per_layer.back();
  }
  return lb;
}

IntervalVector propagate_abstract(const AbstractNetwork& anet, const IntervalVector& box) {
  if (box.size() != anet.input_dim()) {
    throw DimensionError("input box has " + std::to_string(box.size()) +
                         " entries, abstract network expects " + std::to_string(anet.input_dim()));
  }
  if (!iv_subset(box, anet.bounds_box())) {
    throw StaleBoundsError("query box is not inside the box the merged bounds were computed on");
  }
  IntervalVector h = box;
  for (const AbstractLayer& layer : anet.layers()) {
    h = iv_activation(layer.activation, layer.split.affine(layer.bias, h));
  }
  return h;
}

}  // namespace provex
