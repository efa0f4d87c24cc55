#include "provex/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "provex/errors.hpp"
#include "provex/fixtures.hpp"

namespace provex::cli {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string_view to_string(OrderingPolicy policy) {
  switch (policy) {
    case OrderingPolicy::SensitivityAscending: return "sensitivity";
    case OrderingPolicy::InOrder: return "in-order";
    case OrderingPolicy::Random: return "random";
  }
  return "?";
}

std::string_view to_string(GroupMode mode) { return mode == GroupMode::Rgb ? "rgb" : "none"; }
std::string_view to_string(Backend backend) {
  return backend == Backend::Oracle ? "oracle" : "enclosure";
}
std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::Baseline ? "baseline" : "abstraction-refinement";
}

OrderingPolicy parse_order(const std::string& s) {
  if (s == "sensitivity") return OrderingPolicy::SensitivityAscending;
  if (s == "in-order") return OrderingPolicy::InOrder;
  if (s == "random") return OrderingPolicy::Random;
  throw ValidationError("config.order: unknown policy '" + s + "'");
}

GroupMode parse_groups(const std::string& s) {
  if (s == "none") return GroupMode::None;
  if (s == "rgb") return GroupMode::Rgb;
  throw ValidationError("config.groups: unknown mode '" + s + "'");
}

Backend parse_backend(const std::string& s) {
  if (s == "enclosure") return Backend::Enclosure;
  if (s == "oracle") return Backend::Oracle;
  throw ValidationError("config.backend: unknown backend '" + s + "'");
}

std::string group_label(std::size_t g) { return std::to_string(g + 1); }

json labels(const std::vector<std::size_t>& ids) {
  json out = json::array();
  for (std::size_t g : ids) out.push_back(group_label(g));
  return out;
}

std::vector<std::size_t> ids_from_labels(const json& node, std::size_t groups) {
  std::vector<std::size_t> ids;
  for (const json& item : node) {
    const std::string text = item.get<std::string>();
    const std::size_t label = parse_index_list(text).at(0);
    if (label == 0 || label > groups) throw SchemaError("report: group label out of range: " + text);
    ids.push_back(label - 1);
  }
  return ids;
}

FeatureGrouping make_grouping(GroupMode mode, std::size_t features) {
  return mode == GroupMode::Rgb ? FeatureGrouping::pixels(features, 3)
                                : FeatureGrouping::singletons(features);
}

// Every row of every input file, in order.
std::vector<Instance> load_all_instances(const std::vector<std::filesystem::path>& inputs) {
  std::vector<Instance> all;
  for (const auto& path : inputs) {
    for (Instance& inst : read_instances(path)) all.push_back(std::move(inst));
  }
  return all;
}

Instance load_instance(const std::vector<std::filesystem::path>& inputs, std::size_t index) {
  std::vector<Instance> all = load_all_instances(inputs);
  if (index >= all.size()) {
    throw ValidationError("config.instance: index " + std::to_string(index) + " but only " +
                          std::to_string(all.size()) + " instances were read");
  }
  return std::move(all[index]);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write");
  out << text;
}

// 0/1 per feature: 1 = fixed by the explanation.
std::vector<char> feature_mask(const FeatureGrouping& grouping, const std::vector<std::size_t>& ids) {
  std::vector<char> mask(grouping.feature_count(), 0);
  for (std::size_t i : grouping.features_of(ids)) mask[i] = 1;
  return mask;
}

Image masked_image(const Image& source, const std::vector<char>& kept, std::uint8_t flag_gray) {
  static constexpr std::uint8_t kMagenta[3] = {255, 0, 255};
  Image out = source;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (!kept[i]) out.pixels[i] = source.channels == 1 ? flag_gray : kMagenta[i % 3];
  }
  return out;
}

std::string mask_name(const Snapshot& snapshot) { return "mask_rho_" + format_real(snapshot.rho); }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ValidationError("cannot parse '" + item + "' as a number");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ValidationError("cannot parse '" + item + "' as an index");
    }
    out.push_back(v);
  }
  return out;
}

void RunConfig::validate() const {
  if (network.empty() || !std::filesystem::exists(network)) {
    throw ValidationError("config.network: file not found: " + network.string());
  }
  for (const auto& path : inputs) {
    if (!std::filesystem::exists(path)) throw ValidationError("config.input: file not found: " + path.string());
  }
  if (!std::isfinite(epsilon) || epsilon < 0.0) throw ValidationError("config.epsilon: must be >= 0");
  try {
    ReductionSchedule{schedule};
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config.schedule: ") + e.what());
  }
  if (timeout_seconds && (!std::isfinite(*timeout_seconds) || *timeout_seconds < 0.0)) {
    throw ValidationError("config.timeout: must be >= 0");
  }
  if (workers == 0) throw ValidationError("config.workers: must be >= 1");
}

ExplainOptions RunConfig::explain_options() const {
  ExplainOptions options;
  options.backend = backend;
  options.candidates.seed = seed;
  options.oracle_budget = oracle_budget;
  options.bounds_window = bounds_window;
  if (timeout_seconds) options.timeout = std::chrono::duration<double>(*timeout_seconds);
  return options;
}

json RunConfig::to_json() const {
  json inputs_json = json::array();
  for (const auto& p : inputs) inputs_json.push_back(p.string());
  json doc = {{"network", network.string()},
              {"input", std::move(inputs_json)},
              {"instance", instance_index},
              {"epsilon", epsilon},
              {"order", std::string(to_string(order))},
              {"groups", std::string(to_string(groups))},
              {"schedule", schedule},
              {"backend", std::string(to_string(backend))},
              {"algorithm", std::string(to_string(algorithm))},
              {"seed", seed},
              {"bounds_window", bounds_window},
              {"oracle_budget", oracle_budget}};
  doc["timeout"] = timeout_seconds ? json(*timeout_seconds) : json(nullptr);
  return doc;
}

json build_report(const RunConfig& config, const ExplanationResult& result,
                  const std::optional<Image>& image) {
  const ExplanationTrace& trace = result.trace;
  json steps = json::array();
  for (const StepRecord& s : trace.steps) {
    steps.push_back({{"group", group_label(s.group)},
                     {"rho", s.rho},
                     {"verdict", std::string(to_string(s.verdict))},
                     {"decision", std::string(to_string(s.decision))},
                     {"witness", s.witness},
                     {"margin", s.margin},
                     {"neurons", s.neurons},
                     {"explanation_size", s.explanation_size},
                     {"elapsed_seconds", s.elapsed_seconds},
                     {"search_seconds", s.search_seconds},
                     {"build_seconds", s.build_seconds}});
  }
  json snapshots = json::array();
  for (const Snapshot& s : trace.snapshots) {
    snapshots.push_back({{"rho", s.rho}, {"reached", s.reached}, {"explanation", labels(s.explanation)}});
  }
  json order = json::array();
  for (std::size_t g : trace.order) order.push_back(group_label(g));

  const WorkReport work = count_work(trace);
  json per_rho = json::array();
  for (std::size_t i = 0; i < work.queries_per_rho.size(); ++i) {
    per_rho.push_back({{"rho", work.queries_per_rho[i].first},
                       {"queries", work.queries_per_rho[i].second},
                       {"mean_query_seconds", work.mean_query_seconds_per_rho[i].second}});
  }

  json report;
  report["final"] = labels(result.explanation);
  report["status"] = std::string(to_string(trace.status));
  report["trace"] = {{"groups", trace.groups},
                     {"target", trace.target},
                     {"order", std::move(order)},
                     {"steps", std::move(steps)},
                     {"snapshots", std::move(snapshots)},
                     {"refinements", trace.refinements},
                     {"bounds_passes", trace.bounds_passes},
                     {"bounds_neurons", trace.bounds_neurons},
                     {"bounds_seconds", trace.bounds_seconds}};
  report["work"] = {{"features", work.features},
                    {"refinements", work.refinements},
                    {"queries", work.queries},
                    {"per_rho", std::move(per_rho)},
                    {"query_neurons", work.query_neurons},
                    {"neuron_evaluations", work.neuron_evaluations}};
  report["config"] = config.to_json();
  if (image) {
    report["image"] = {{"width", image->width}, {"height", image->height}, {"channels", image->channels}};
  }
  return report;
}

// ---------------------------------------------------------------------------

int cmd_explain(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    if (config.inputs.empty()) throw ValidationError("config.input: no instance file given");
    const Network net = load_network_file(config.network);
    const Instance inst = load_instance(config.inputs, config.instance_index);
    const FeatureGrouping grouping = make_grouping(config.groups, net.input_dim());
    const FeatureOrdering ordering =
        order_features(net, inst.values, grouping, config.order, config.seed);
    const ExplainOptions options = config.explain_options();

    const ExplanationResult result =
        config.algorithm == Algorithm::Baseline
            ? explain_baseline(net, inst.values, config.epsilon, grouping, ordering, options)
            : explain_abstraction_refinement(net, inst.values, config.epsilon, grouping, ordering,
                                             ReductionSchedule(config.schedule), options);

    std::filesystem::create_directories(config.out_dir);
    const json report = build_report(config, result, inst.image);
    write_text(config.out_dir / "report.json", report.dump(2) + "\n");

    auto write_mask = [&](const std::string& name, const std::vector<std::size_t>& ids) {
      const std::vector<char> kept = feature_mask(grouping, ids);
      if (inst.image) {
        const char* ext = inst.image->channels == 1 ? ".pgm" : ".ppm";
        write_pnm(masked_image(*inst.image, kept, 128), config.out_dir / (name + ext));
      } else {
        Vector row(static_cast<Eigen::Index>(kept.size()));
        for (std::size_t i = 0; i < kept.size(); ++i) row[static_cast<Eigen::Index>(i)] = kept[i];
        write_csv_instances({row}, config.out_dir / (name + ".csv"));
      }
    };
    for (const Snapshot& s : result.trace.snapshots) write_mask(mask_name(s), s.explanation);
    write_mask("mask_final", result.explanation);

    out << "final: [";
    for (std::size_t i = 0; i < result.explanation.size(); ++i) {
      out << (i ? ", " : "") << group_label(result.explanation[i]);
    }
    out << "] size " << result.explanation.size() << " of " << grouping.size() << ", status "
        << to_string(result.trace.status) << "\n";
    return result.trace.status == RunStatus::SufficientEarlyStop ? kEarlyStop : kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

int cmd_verify(const VerifyConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (!std::isfinite(config.epsilon) || config.epsilon < 0.0) {
      throw ValidationError("epsilon: must be >= 0");
    }
    const Network net = load_network_file(config.network);
    const Instance inst = load_instance({config.input}, config.instance_index);
    const FeatureGrouping grouping = make_grouping(config.groups, net.input_dim());
    std::vector<std::size_t> ids;
    for (std::size_t label : config.subset) {
      if (label == 0 || label > grouping.size()) {
        throw ValidationError("subset: label " + std::to_string(label) + " outside 1.." +
                              std::to_string(grouping.size()));
      }
      ids.push_back(label - 1);
    }
    const auto q = SufficiencyQuery::make(net, inst.values, grouping.features_of(ids), config.epsilon);

    VerdictKind kind = VerdictKind::Uncertain;
    std::optional<Vector> witness;
    if (config.backend == Backend::Oracle) {
      OracleResult r = oracle_check(net, q, config.oracle_budget);
      kind = r.outcome == OracleOutcome::ProvedSufficient ? VerdictKind::Sufficient
             : r.outcome == OracleOutcome::Witness        ? VerdictKind::Insufficient
                                                          : VerdictKind::Uncertain;
      witness = std::move(r.witness);
    } else {
      CandidateOptions candidates;
      candidates.seed = config.seed;
      Verdict v = check_concrete(net, q, candidates);
      kind = v.kind;
      witness = std::move(v.witness);
    }
    out << to_string(kind) << "\n";
    if (witness) {
      out << "witness:";
      for (Eigen::Index i = 0; i < witness->size(); ++i) out << (i ? "," : " ") << format_real((*witness)[i]);
      out << "\n";
    }
    switch (kind) {
      case VerdictKind::Sufficient: return kOk;
      case VerdictKind::Insufficient: return kInsufficient;
      case VerdictKind::Uncertain: return kUncertain;
    }
    return kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

namespace {

struct BenchRow {
  ExplanationResult result;
  WorkReport work;
  double wall_time = 0.0;
};

}  // namespace

int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    const Network net = load_network_file(config.network);
    const std::vector<Instance> instances = load_all_instances(config.inputs);
    const FeatureGrouping grouping = make_grouping(config.groups, net.input_dim());
    const ReductionSchedule schedule(config.schedule);
    const ExplainOptions options = config.explain_options();

    // Two rows per instance: abstraction-refinement, then baseline.
    std::vector<BenchRow> rows(instances.size() * 2);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < instances.size(); k = next++) {
        const Vector& x = instances[k].values;
        const FeatureOrdering ordering = order_features(net, x, grouping, config.order, config.seed);
        auto start = Clock::now();
        rows[2 * k].result =
            explain_abstraction_refinement(net, x, config.epsilon, grouping, ordering, schedule, options);
        rows[2 * k].wall_time = std::chrono::duration<double>(Clock::now() - start).count();
        start = Clock::now();
        rows[2 * k + 1].result = explain_baseline(net, x, config.epsilon, grouping, ordering, options);
        rows[2 * k + 1].wall_time = std::chrono::duration<double>(Clock::now() - start).count();
        for (std::size_t r = 2 * k; r < 2 * k + 2; ++r) rows[r].work = count_work(rows[r].result.trace);
        spdlog::debug("instance {}: sizes {} / {}", k, rows[2 * k].result.explanation.size(),
                     rows[2 * k + 1].result.explanation.size());
      }
    };
    const std::size_t workers = std::min(config.workers, std::max<std::size_t>(instances.size(), 1));
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    std::filesystem::create_directories(config.out_dir);
    std::ostringstream csv;
    csv << "instance,algorithm,explanation_size,queries,refinements,neuron_evaluations,wall_time\n";
    std::ostringstream rho_csv;
    rho_csv << "instance,algorithm,rho,queries,mean_query_seconds\n";
    std::size_t mismatches = 0;
    std::size_t cheaper = 0;
    std::map<double, std::pair<std::size_t, double>> per_rho;  // abstraction-refinement only
    for (std::size_t k = 0; k < instances.size(); ++k) {
      for (std::size_t r = 2 * k; r < 2 * k + 2; ++r) {
        const char* name = r % 2 == 0 ? "abstraction-refinement" : "baseline";
        const WorkReport& w = rows[r].work;
        csv << k << ',' << name << ',' << rows[r].result.explanation.size() << ',' << w.queries << ','
            << w.refinements << ',' << w.neuron_evaluations << ',' << format_real(rows[r].wall_time) << '\n';
        for (std::size_t i = 0; i < w.queries_per_rho.size(); ++i) {
          const double rho = w.queries_per_rho[i].first;
          const double mean = w.mean_query_seconds_per_rho[i].second;
          rho_csv << k << ',' << name << ',' << format_real(rho) << ',' << w.queries_per_rho[i].second
                  << ',' << format_real(mean) << '\n';
          if (r % 2 == 0) {
            per_rho[rho].first += w.queries_per_rho[i].second;
            per_rho[rho].second += mean * static_cast<double>(w.queries_per_rho[i].second);
          }
        }
      }
      if (rows[2 * k].result.explanation != rows[2 * k + 1].result.explanation) {
        ++mismatches;
        err << "instance " << k << ": explanations differ (sizes "
            << rows[2 * k].result.explanation.size() << " vs "
            << rows[2 * k + 1].result.explanation.size() << ")\n";
      }
      if (rows[2 * k].work.neuron_evaluations <= rows[2 * k + 1].work.neuron_evaluations) ++cheaper;
    }
    write_text(config.out_dir / "bench.csv", csv.str());
    write_text(config.out_dir / "bench_rho.csv", rho_csv.str());

    out << "instances: " << instances.size() << "\n";
    out << "abstraction-refinement neuron evaluations <= baseline on " << cheaper << " of "
        << instances.size() << "\n";
    for (const auto& [rho, entry] : per_rho) {
      out << "rho " << format_real(rho) << ": " << entry.first << " queries, mean "
          << format_real(entry.first ? entry.second / static_cast<double>(entry.first) : 0.0) << " s\n";
    }
    return mismatches == 0 ? kOk : kEquivalenceFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

int cmd_render(const RenderConfig& config, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(config.report);
    if (!in) throw ValidationError("report: cannot open " + config.report.string());
    json report;
    try {
      report = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("report: ") + e.what());
    }
    try {
      const json& cfg = report.at("config");
      std::vector<std::filesystem::path> inputs;
      for (const json& p : cfg.at("input")) inputs.emplace_back(p.get<std::string>());
      const Instance inst = load_instance(inputs, cfg.at("instance").get<std::size_t>());
      if (!inst.image) throw ValidationError("render: the instance is not an image");
      const Image& image = *inst.image;
      const FeatureGrouping grouping =
          make_grouping(parse_groups(cfg.at("groups").get<std::string>()), image.pixels.size());

      std::vector<std::pair<std::string, Image>> panels;
      for (const json& snap : report.at("trace").at("snapshots")) {
        Snapshot s;
        s.rho = snap.at("rho").get<double>();
        const auto ids = ids_from_labels(snap.at("explanation"), grouping.size());
        panels.emplace_back("panel_rho_" + format_real(s.rho),
                            masked_image(image, feature_mask(grouping, ids), config.flag_gray));
      }
      const auto final_ids = ids_from_labels(report.at("final"), grouping.size());
      panels.emplace_back("panel_final",
                          masked_image(image, feature_mask(grouping, final_ids), config.flag_gray));

      std::filesystem::create_directories(config.out_dir);
      const char* ext = image.channels == 1 ? ".pgm" : ".ppm";
      if (config.layout == Layout::Panels) {
        for (const auto& [name, panel] : panels) write_pnm(panel, config.out_dir / (name + ext));
      } else {
        constexpr std::size_t kGutter = 2;
        Image grid;
        grid.channels = image.channels;
        grid.height = image.height;
        grid.width = panels.size() * image.width + (panels.size() - 1) * kGutter;
        grid.pixels.assign(grid.pixel_count() * grid.channels, 0);
        for (std::size_t p = 0; p < panels.size(); ++p) {
          const Image& panel = panels[p].second;
          const std::size_t x0 = p * (image.width + kGutter);
          for (std::size_t y = 0; y < image.height; ++y) {
            std::copy_n(panel.pixels.begin() + static_cast<std::ptrdiff_t>(y * image.width * image.channels),
                        image.width * image.channels,
                        grid.pixels.begin() +
                            static_cast<std::ptrdiff_t>((y * grid.width + x0) * grid.channels));
          }
        }
        write_pnm(grid, config.out_dir / (std::string("grid") + ext));
      }
      out << "panels: " << panels.size() << "\n";
      return kOk;
    } catch (const json::exception& e) {
      throw SchemaError(std::string("report: ") + e.what());
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

int cmd_fixture(const FixtureConfig& config, std::ostream& out, std::ostream& err) {
  try {
    FixtureSpec spec = fixture_spec_from_kind(config.kind);
    if (std::holds_alternative<CustomSpec>(spec)) {
      throw ValidationError("kind: custom fixtures are read from disk, not generated");
    }
    if (auto* random = std::get_if<RandomSpec>(&spec)) {
      random->inputs = config.inputs;
      random->widths = config.widths;
      random->outputs = config.outputs;
      random->activation = parse_activation(config.activation);
      random->seed = config.seed;
      random->instances = config.instances;
    } else if (auto* mnist = std::get_if<MnistShapeSpec>(&spec)) {
      mnist->seed = config.seed;
      mnist->instances = config.instances;
    }
    Fixture fixture = make_fixture(spec);

    std::filesystem::create_directories(config.out_dir);
    save_network_file(fixture.network, config.out_dir / "network.json");
    if (config.images) {
      const std::size_t n = fixture.network.input_dim();
      const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
      if (side * side != n) {
        throw ValidationError("images: " + std::to_string(n) + " inputs do not form a square image");
      }
      for (std::size_t k = 0; k < fixture.instances.size(); ++k) {
        Image image = vector_to_image(fixture.instances[k], side, side, 1);
        write_pnm(image, config.out_dir / ("instance_" + std::to_string(k) + ".pgm"));
        fixture.instances[k] = image_to_vector(image);
      }
    }
    write_csv_instances(fixture.instances, config.out_dir / "instances.csv");
    out << "wrote " << (config.out_dir / "network.json").string() << " and "
        << fixture.instances.size() << " instances\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

// Parsers used by the tool's flag handling.
OrderingPolicy parse_order_flag(const std::string& s) { return parse_order(s); }
GroupMode parse_groups_flag(const std::string& s) { return parse_groups(s); }
Backend parse_backend_flag(const std::string& s) { return parse_backend(s); }

}  // namespace provex::cli
