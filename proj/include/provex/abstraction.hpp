#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "provex/abstract_network.hpp"
#include "provex/bounds.hpp"
#include "provex/network.hpp"

namespace provex {

struct NeuronScore {
  std::size_t layer = 0;
  std::size_t neuron = 0;
  double score = 0.0;
};

// Per hidden layer, neurons ranked by ascending merge cost
//   width(I_k[j]) * max_i |W_{k+1}[i, j]|,
// ties broken by neuron index.
std::vector<std::vector<NeuronScore>> score_neurons(const Network& net, const LayerBounds& lb);

// All hidden neurons in one ascending list, ties broken by (layer, neuron).
std::vector<NeuronScore> rank_globally(const std::vector<std::vector<NeuronScore>>& per_layer);

// Hidden neurons kept at reduction rate rho: floor(rho * total).
std::size_t kept_neuron_count(std::size_t total_hidden, double rho);

// Merges the lowest-scored hidden neurons until only kept_neuron_count remain.
// Each merged neuron is deleted and W_{k+1}[:, j] * I_k[j] is added to the
// next layer's bias as an interval.
AbstractNetwork build_abstract(const Network& net, const LayerBounds& lb, double rho);

// Applies an explicit merge set. `rho` is recorded as the schedule level.
AbstractNetwork build_from_spec(const Network& net, const LayerBounds& lb, const MergeSpec& spec,
                                double rho);

// Un-merges the highest-scored members of prev's merge set until the rate for
// rho reaches kept_neuron_count. The result's merge set is a subset of prev's,
// so its enclosure is nested inside prev's for every box.
AbstractNetwork refine(const Network& net, const AbstractNetwork& prev, const LayerBounds& lb,
                       double rho);

// Strictly increasing reduction rates in (0, 1] ending at 1.
class ReductionSchedule {
 public:
  explicit ReductionSchedule(std::vector<double> rates);

  // "0.1,0.2,...,1.0" style list.
  static ReductionSchedule parse(std::string_view text);
  // step, 2*step, ..., 1.0
  static ReductionSchedule uniform(double step);

  const std::vector<double>& rates() const { return rates_; }
  std::size_t size() const { return rates_.size(); }
  double operator[](std::size_t i) const { return rates_.at(i); }
  std::string to_string() const;

 private:
  std::vector<double> rates_;
};

// Network schema extended with "bias_lo"/"bias_hi" plus the merge metadata.
nlohmann::json abstract_to_json(const AbstractNetwork& anet);
AbstractNetwork abstract_from_json(const nlohmann::json& doc);

}  // namespace provex
