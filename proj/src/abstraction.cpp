#include "provex/abstraction.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include "provex/errors.hpp"

namespace provex {

using nlohmann::json;

namespace {

void require_matching_bounds(const Network& net, const LayerBounds& lb) {
  if (lb.network_id != net.fingerprint() || lb.per_layer.size() != net.layer_count()) {
    throw StaleBoundsError("layer bounds were computed for a different network");
  }
}

void require_rate(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw ValidationError("rho out of range (0, 1]: " + std::to_string(rho));
  }
}

bool score_less(const NeuronScore& a, const NeuronScore& b) {
  if (a.score != b.score) return a.score < b.score;
  if (a.layer != b.layer) return a.layer < b.layer;
  return a.neuron < b.neuron;
}

std::vector<Eigen::Index> complement(const std::vector<std::size_t>& removed, std::size_t n) {
  std::vector<Eigen::Index> kept;
  kept.reserve(n - removed.size());
  auto it = removed.begin();
  for (std::size_t j = 0; j < n; ++j) {
    if (it != removed.end() && *it == j) {
      ++it;
    } else {
      kept.push_back(static_cast<Eigen::Index>(j));
    }
  }
  return kept;
}

std::vector<Eigen::Index> all_indices(std::size_t n) {
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

MergeSpec spec_from_ranking(const Network& net, const LayerBounds& lb,
                            const std::vector<NeuronScore>& merged) {
  MergeSpec spec;
  spec.per_layer_merged.resize(net.hidden_layer_count());
  for (const NeuronScore& s : merged) spec.per_layer_merged[s.layer].push_back(s.neuron);
  for (auto& layer : spec.per_layer_merged) std::sort(layer.begin(), layer.end());
  spec.total_hidden = net.hidden_neuron_count();
  spec.source_net_id = net.fingerprint();
  spec.query_fingerprint = lb.fingerprint();
  return spec;
}

}  // namespace

std::vector<std::vector<NeuronScore>> score_neurons(const Network& net, const LayerBounds& lb) {
  require_matching_bounds(net, lb);
  std::vector<std::vector<NeuronScore>> scores(net.hidden_layer_count());
  for (std::size_t k = 0; k < net.hidden_layer_count(); ++k) {
    const Vector width = lb.per_layer[k].width();
    const Vector reach = net.layer(k + 1).weights.cwiseAbs().colwise().maxCoeff().transpose();
    auto& layer_scores = scores[k];
    layer_scores.reserve(static_cast<std::size_t>(width.size()));
    for (Eigen::Index j = 0; j < width.size(); ++j) {
      layer_scores.push_back({k, static_cast<std::size_t>(j), width[j] * reach[j]});
    }
    std::sort(layer_scores.begin(), layer_scores.end(), score_less);
  }
  return scores;
}

std::vector<NeuronScore> rank_globally(const std::vector<std::vector<NeuronScore>>& per_layer) {
  std::vector<NeuronScore> all;
  for (const auto& layer : per_layer) all.insert(all.end(), layer.begin(), layer.end());
  std::sort(all.begin(), all.end(), score_less);
  return all;
}

std::size_t kept_neuron_count(std::size_t total_hidden, double rho) {
  require_rate(rho);
  const auto kept = static_cast<std::size_t>(
      std::floor(rho * static_cast<double>(total_hidden) + 1e-9));
  return std::min(kept, total_hidden);
}

AbstractNetwork build_from_spec(const Network& net, const LayerBounds& lb, const MergeSpec& spec,
                                double rho) {
  require_matching_bounds(net, lb);
  require_rate(rho);
  const std::size_t hidden_layers = net.hidden_layer_count();
  if (spec.per_layer_merged.size() != hidden_layers) {
    throw ValidationError("merge spec lists " + std::to_string(spec.per_layer_merged.size()) +
                          " hidden layers, network has " + std::to_string(hidden_layers));
  }
  for (std::size_t k = 0; k < hidden_layers; ++k) {
    const auto& merged = spec.per_layer_merged[k];
    if (!std::is_sorted(merged.begin(), merged.end()) ||
        std::adjacent_find(merged.begin(), merged.end()) != merged.end() ||
        (!merged.empty() && merged.back() >= net.layer(k).out())) {
      throw ValidationError("merge spec layer " + std::to_string(k) +
                            ": indices must be sorted, unique and in range");
    }
  }

  std::vector<AbstractLayer> layers;
  layers.reserve(net.layer_count());
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    const DenseLayer& layer = net.layer(k);
    const bool hidden = k < hidden_layers;
    const std::vector<Eigen::Index> rows =
        hidden ? complement(spec.per_layer_merged[k], layer.out()) : all_indices(layer.out());
    const std::vector<Eigen::Index> cols =
        k > 0 ? complement(spec.per_layer_merged[k - 1], layer.in()) : all_indices(layer.in());

    AbstractLayer out;
    out.activation = layer.activation;
    out.weights = layer.weights(rows, cols);
    Vector bias = layer.bias(rows);
    out.bias = IntervalVector::point(bias);
    out.kept.assign(rows.begin(), rows.end());

    if (k > 0 && !spec.per_layer_merged[k - 1].empty()) {
      // b' = b (+) W[:, B] I[B]: the merged neurons' bounded contribution.
      const auto& merged = spec.per_layer_merged[k - 1];
      const std::vector<Eigen::Index> merged_idx(merged.begin(), merged.end());
      const IntervalVector& source = lb.per_layer[k - 1];
      const IntervalVector merged_bounds(source.lo()(merged_idx), source.hi()(merged_idx));
      const Matrix absorbed = layer.weights(rows, merged_idx);
      const IntervalVector error = iv_affine(
          absorbed, IntervalVector(static_cast<std::size_t>(rows.size())), merged_bounds);
      out.bias = iv_add(out.bias, error);
    }
    layers.push_back(std::move(out));
  }

  MergeSpec recorded = spec;
  recorded.total_hidden = net.hidden_neuron_count();
  recorded.source_net_id = net.fingerprint();
  recorded.query_fingerprint = lb.fingerprint();
  return AbstractNetwork(std::move(layers), std::move(recorded), rho, lb.input_box);
}

AbstractNetwork build_abstract(const Network& net, const LayerBounds& lb, double rho) {
  require_matching_bounds(net, lb);
  const std::size_t total = net.hidden_neuron_count();
  const std::size_t kept = kept_neuron_count(total, rho);
  const std::vector<NeuronScore> ranking = rank_globally(score_neurons(net, lb));
  const std::vector<NeuronScore> merged(ranking.begin(),
                                        ranking.begin() + static_cast<std::ptrdiff_t>(total - kept));
  return build_from_spec(net, lb, spec_from_ranking(net, lb, merged), rho);
}

AbstractNetwork refine(const Network& net, const AbstractNetwork& prev, const LayerBounds& lb,
                       double rho) {
  require_rate(rho);
  if (!(rho > prev.rho())) {
    throw OrderingError("refinement needs a larger reduction rate: " + std::to_string(rho) +
                        " <= " + std::to_string(prev.rho()));
  }
  require_matching_bounds(net, lb);
  if (prev.spec().source_net_id != net.fingerprint() ||
      prev.spec().query_fingerprint != lb.fingerprint()) {
    throw StaleBoundsError("refinement must use the bounds the abstraction was built from");
  }

  const std::size_t total = net.hidden_neuron_count();
  const std::size_t target_merged = total - kept_neuron_count(total, rho);

  // Rank only the previously merged neurons; the cheapest stay merged.
  const auto scores = score_neurons(net, lb);
  std::vector<NeuronScore> candidates;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto& merged = prev.spec().per_layer_merged[k];
    for (const NeuronScore& s : scores[k]) {
      if (std::binary_search(merged.begin(), merged.end(), s.neuron)) candidates.push_back(s);
    }
  }
  std::sort(candidates.begin(), candidates.end(), score_less);
  candidates.resize(std::min(candidates.size(), target_merged));
  return build_from_spec(net, lb, spec_from_ranking(net, lb, candidates), rho);
}

// ---------------------------------------------------------------------------

ReductionSchedule::ReductionSchedule(std::vector<double> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw ValidationError("schedule: empty");
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (!std::isfinite(rates_[i]) || rates_[i] <= 0.0 || rates_[i] > 1.0) {
      throw ValidationError("schedule: rate " + std::to_string(rates_[i]) + " outside (0, 1]");
    }
    if (i > 0 && !(rates_[i] > rates_[i - 1])) {
      throw ValidationError("schedule: rates must be strictly increasing");
    }
  }
  if (rates_.back() != 1.0) throw ValidationError("schedule: last rate must be 1.0");
}

ReductionSchedule ReductionSchedule::parse(std::string_view text) {
  std::vector<double> rates;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ValidationError("schedule: cannot parse '" + std::string(item) + "'");
    }
    rates.push_back(value);
    pos = end + 1;
  }
  return ReductionSchedule(std::move(rates));
}

ReductionSchedule ReductionSchedule::uniform(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ValidationError("schedule: step outside (0, 1]");
  const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
  std::vector<double> rates;
  for (std::size_t k = 1; k <= n; ++k) rates.push_back(static_cast<double>(k) / static_cast<double>(n));
  return ReductionSchedule(std::move(rates));
}

std::string ReductionSchedule::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), rates_[i]);
    if (i > 0) out += ',';
    out.append(buf, ptr);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_json_reals(const json& node) {
  const auto values = node.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json abstract_to_json(const AbstractNetwork& anet) {
  json doc;
  doc["input_dim"] = anet.input_dim();
  doc["rho"] = anet.rho();
  doc["reduction_rate"] = anet.reduction_rate();
  doc["total_hidden"] = anet.spec().total_hidden;
  doc["source_net_id"] = anet.spec().source_net_id;
  doc["query_fingerprint"] = anet.spec().query_fingerprint;
  doc["merged"] = anet.spec().per_layer_merged;
  doc["bounds_box"] = {{"lo", to_std(anet.bounds_box().lo())},
                       {"hi", to_std(anet.bounds_box().hi())}};
  json layers = json::array();
  for (const AbstractLayer& layer : anet.layers()) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) row.push_back(layer.weights(i, j));
      rows.push_back(std::move(row));
    }
    json node = {{"kind", "dense"},
                 {"activation", std::string(to_string(layer.activation))},
                 {"weights", std::move(rows)},
                 {"kept", layer.kept}};
    if (layer.bias.is_point()) {
      node["bias"] = to_std(layer.bias.lo());
    } else {
      node["bias_lo"] = to_std(layer.bias.lo());
      node["bias_hi"] = to_std(layer.bias.hi());
    }
    layers.push_back(std::move(node));
  }
  doc["layers"] = std::move(layers);
  return doc;
}

AbstractNetwork abstract_from_json(const json& doc) {
  try {
    MergeSpec spec;
    spec.per_layer_merged = doc.at("merged").get<std::vector<std::vector<std::size_t>>>();
    spec.total_hidden = doc.at("total_hidden").get<std::size_t>();
    spec.source_net_id = doc.at("source_net_id").get<std::uint64_t>();
    spec.query_fingerprint = doc.at("query_fingerprint").get<std::uint64_t>();
    const auto input_dim = doc.at("input_dim").get<std::size_t>();

    std::vector<AbstractLayer> layers;
    std::size_t fan_in = input_dim;
    for (const json& node : doc.at("layers")) {
      AbstractLayer layer;
      layer.activation = parse_activation(node.at("activation").get<std::string>());
      const auto rows = node.at("weights").get<std::vector<std::vector<double>>>();
      layer.weights.resize(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(fan_in));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != fan_in) throw SchemaError("layers: weight row length mismatch");
        for (std::size_t j = 0; j < fan_in; ++j) {
          layer.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
      }
      if (node.contains("bias")) {
        layer.bias = IntervalVector::point(from_json_reals(node.at("bias")));
      } else {
        layer.bias = IntervalVector(from_json_reals(node.at("bias_lo")),
                                    from_json_reals(node.at("bias_hi")));
      }
      layer.kept = node.at("kept").get<std::vector<std::size_t>>();
      fan_in = rows.size();
      layers.push_back(std::move(layer));
    }
    const json& box = doc.at("bounds_box");
    return AbstractNetwork(std::move(layers), std::move(spec), doc.at("rho").get<double>(),
                           IntervalVector(from_json_reals(box.at("lo")), from_json_reals(box.at("hi"))));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("abstract network document: ") + e.what());
  }
}

}  // namespace provex
