#pragma once

#include <cstdint>
#include <vector>

#include "provex/abstract_network.hpp"
#include "provex/interval.hpp"
#include "provex/network.hpp"

namespace provex {

// Post-activation enclosures of every layer for one input box.
struct LayerBounds {
  IntervalVector input_box;
  std::vector<IntervalVector> per_layer;
  std::uint64_t network_id = 0;

  const IntervalVector& output() const { return per_layer.back(); }
  std::uint64_t fingerprint() const;
};

// Interval propagation through the concrete network. The box must lie inside
// the network's input domain.
LayerBounds propagate_box(const Network& net, const IntervalVector& box);

// Output enclosure of an abstract network. Throws StaleBoundsError when the
// box is not inside the box the abstraction's merged bounds were computed on,
// since the enclosure would not be sound there.
IntervalVector propagate_abstract(const AbstractNetwork& anet, const IntervalVector& box);

}  // namespace provex
