// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "provex/abstraction.hpp"
#include "provex/bounds.hpp"
#include "provex/cli/commands.hpp"
#include "provex/explain.hpp"
#include "provex/fixtures.hpp"
#include "provex/io.hpp"
#include "provex/queries.hpp"
#include "support/support.hpp"

using namespace provex;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

bool equal_intervals(const IntervalVector& a, const IntervalVector& b, double slack) {
  return iv_subset(a, b, slack) && iv_subset(b, a, slack);
}

std::vector<std::size_t> random_subset(std::size_t n, SplitMix64& rng, double keep) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < n; ++i) if (rng.uniform() < keep) s.push_back(i);
  return s;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

// Chain of abstractions along `rates`, each refined from the previous one.
std::vector<AbstractNetwork> abstraction_chain(const Network& net, const LayerBounds& lb,
                                               const std::vector<double>& rates) {
  std::vector<AbstractNetwork> chain;
  for (double rho : rates) {
    chain.push_back(chain.empty() ? build_abstract(net, lb, rho) : refine(net, chain.back(), lb, rho));
  }
  return chain;
}

Outcome running_example() {
  const Network net = running_example_network();
  const Vector x = running_example_instance();
  const auto start = Clock::now();
  const Vector y = forward(net, x);
  const auto q = SufficiencyQuery::make(net, x, {1, 2}, 1.0);
  const LayerBounds lb = propagate_box(net, q.box());
  const double elapsed = seconds_since(start);
  const bool logits = y[0] == 15.0 && y[1] == 46.0;
  const bool enclosure = equal_intervals(lb.output(), IntervalVector(Vector{{15, 46}}, Vector{{22, 55}}), 1e-9);
  return {logits && enclosure && elapsed < 1e-3,
          fmt("logits (%g,%g), output [%g,%g] [%g,%g], %.1f us", y[0], y[1], lb.output().lo()[0],
              lb.output().hi()[0], lb.output().lo()[1], lb.output().hi()[1], elapsed * 1e6)};
}

Outcome soundness() {
  const auto start = Clock::now();
  SplitMix64 rng(2002);
  std::size_t sufficient = 0, witnesses = 0, exhausted = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Activation act = seed < 100 ? Activation::Relu : Activation::Sigmoid;
    const Network net = test::small_random_network(seed + 7000, 6, 3, act, 48);
    const Vector x = test::random_point(net.input_domain(), rng);
    for (double eps : {0.01, 0.05, 0.1}) {
      const auto outer = SufficiencyQuery::make(net, x, {}, eps);
      const LayerBounds lb = propagate_box(net, outer.box());
      const auto chain = abstraction_chain(net, lb, {0.25, 0.5, 0.75, 1.0});
      for (int trial = 0; trial < 3; ++trial) {
        const auto q = SufficiencyQuery::make(net, x, random_subset(6, rng, 0.4), eps);
        for (const AbstractNetwork& anet : chain) {
          if (check_abstract(anet, q).kind != VerdictKind::Sufficient) continue;
          ++sufficient;
          const OracleResult r = oracle_check(net, q, 1 << 12);
          witnesses += r.outcome == OracleOutcome::Witness;
          exhausted += r.outcome == OracleOutcome::Exhausted;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {witnesses == 0 && sufficient > 0 && elapsed < 60.0,
          fmt("%zu sufficient abstract queries, %zu witnesses, %zu unresolved, %.1f s", sufficient, witnesses,
              exhausted, elapsed)};
}

Outcome containment() {
  SplitMix64 rng(3003);
  std::size_t violations = 0, checks = 0;
  const std::vector<double> rates{0.1, 0.3, 0.6, 1.0};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Activation act = seed % 3 == 0 ? Activation::Tanh : seed % 2 ? Activation::Relu : Activation::Sigmoid;
    const Network net = test::small_random_network(seed + 8000, 5, 3, act, 24);
    const IntervalVector box = test::random_box(net.input_domain(), rng);
    const LayerBounds lb = propagate_box(net, box);
    const auto chain = abstraction_chain(net, lb, rates);
    std::vector<IntervalVector> outputs;
    for (const AbstractNetwork& anet : chain) outputs.push_back(propagate_abstract(anet, box));
    for (std::size_t k = 1; k < outputs.size(); ++k, ++checks) {
      violations += !iv_subset(outputs[k], outputs[k - 1], test::kSlack);
    }
    ++checks;
    violations += !iv_subset(lb.output(), outputs.back(), test::kSlack);
    for (int p = 0; p < 20; ++p) {
      const Vector point = test::random_point(box, rng);
      const std::vector<double> y = test::naive_forward(net, test::to_std(point));
      const IntervalVector hit(test::to_eigen(y), test::to_eigen(y));
      for (const IntervalVector& out : outputs) {
        ++checks;
        violations += !iv_subset(hit, out, test::kSlack);
      }
      // Sub-boxes stay inside the enclosure of the box the bounds came from.
      const IntervalVector sub = test::random_box(box, rng);
      ++checks;
      violations += !iv_subset(propagate_abstract(chain.front(), sub), outputs.front(), test::kSlack);
    }
  }
  return {violations == 0, fmt("%zu containment checks, %zu violations", checks, violations)};
}

Outcome implication_chain() {
  SplitMix64 rng(4004);
  const std::vector<double> rates{0.25, 0.5, 0.75, 1.0};
  std::size_t reversals = 0, growths = 0, verdicts = 0, runs = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Network net = test::small_random_network(seed + 9000, 8, 3, seed % 2 ? Activation::Relu : Activation::Sigmoid, 32);
    const Vector x = test::random_point(net.input_domain(), rng);
    const double eps = rng.uniform(0.02, 0.15);
    const LayerBounds lb = propagate_box(net, SufficiencyQuery::make(net, x, {}, eps).box());
    const auto chain = abstraction_chain(net, lb, rates);
    for (int trial = 0; trial < 5; ++trial) {
      const auto q = SufficiencyQuery::make(net, x, random_subset(8, rng, 0.5), eps);
      bool sufficient = false;
      for (const AbstractNetwork& anet : chain) {
        const bool now = check_abstract(anet, q).kind == VerdictKind::Sufficient;
        reversals += sufficient && !now;
        sufficient = sufficient || now;
        ++verdicts;
      }
    }
    const FeatureGrouping g = FeatureGrouping::singletons(8);
    const auto order = order_features(net, x, g, OrderingPolicy::SensitivityAscending);
    const auto r = explain_abstraction_refinement(net, x, eps, g, order, ReductionSchedule(rates));
    ++runs;
    for (std::size_t l = 1; l < r.trace.snapshots.size(); ++l) {
      growths += r.trace.snapshots[l].explanation.size() > r.trace.snapshots[l - 1].explanation.size();
    }
    std::size_t previous = g.size();
    for (const StepRecord& s : r.trace.steps) {
      growths += s.explanation_size > previous;
      previous = s.explanation_size;
    }
  }
  return {reversals == 0 && growths == 0,
          fmt("%zu verdicts, %zu reversals; %zu runs, %zu size increases", verdicts, reversals, runs, growths)};
}

Outcome equivalence() {
  SplitMix64 rng(5005);
  std::size_t mismatches = 0;
  const auto dir = test::temp_dir("acceptance_equivalence");
  int bench_code = 0;
  for (std::uint64_t n = 0; n < 4; ++n) {
    const Activation act = n % 2 ? Activation::Relu : Activation::Sigmoid;
    const Network net = random_network(12, {24, 24}, 4, act, 500 + n);
    std::vector<Vector> xs;
    for (int k = 0; k < 25; ++k) xs.push_back(test::random_point(net.input_domain(), rng));
    const FeatureGrouping g = FeatureGrouping::singletons(12);
    for (const Vector& x : xs) {
      const auto order = order_features(net, x, g, OrderingPolicy::SensitivityAscending);
      const auto a = explain_baseline(net, x, 0.05, g, order);
      const auto b = explain_abstraction_refinement(net, x, 0.05, g, order, ReductionSchedule::uniform(0.1));
      mismatches += a.explanation != b.explanation;
    }
    const auto sub = dir / std::to_string(n);
    std::filesystem::create_directories(sub);
    save_network_file(net, sub / "net.json");
    write_csv_instances(xs, sub / "x.csv");
    cli::RunConfig c;
    c.network = sub / "net.json";
    c.inputs = {sub / "x.csv"};
    c.epsilon = 0.05;
    c.out_dir = sub / "bench";
    c.workers = 4;
    std::ostringstream out, err;
    bench_code = std::max(bench_code, cli::cmd_bench(c, out, err));
  }
  return {mismatches == 0 && bench_code == 0,
          fmt("100 instances, %zu differing sets, bench exit code %d", mismatches, bench_code)};
}

Outcome minimality() {
  SplitMix64 rng(6006);
  ExplainOptions options;
  options.backend = Backend::Oracle;
  std::size_t not_proved = 0, removable = 0, retained = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 4 + seed % 7;
    const Network net = random_network(n, {12}, 3, seed % 2 ? Activation::Relu : Activation::Sigmoid, seed + 600);
    const Vector x = test::random_point(net.input_domain(), rng);
    const double eps = 0.2;
    const FeatureGrouping g = FeatureGrouping::singletons(n);
    const auto order = order_features(net, x, g, OrderingPolicy::SensitivityAscending);
    const auto r = explain_baseline(net, x, eps, g, order, options);
    not_proved += oracle_check(net, SufficiencyQuery::make(net, x, r.explanation, eps), options.oracle_budget).outcome !=
                  OracleOutcome::ProvedSufficient;
    for (std::size_t keep : r.explanation) {
      ++retained;
      std::vector<std::size_t> smaller;
      for (std::size_t i : r.explanation) if (i != keep) smaller.push_back(i);
      removable += oracle_check(net, SufficiencyQuery::make(net, x, smaller, eps), options.oracle_budget).outcome !=
                   OracleOutcome::Witness;
    }
  }
  return {not_proved == 0 && removable == 0,
          fmt("50 instances, %zu retained features, %zu without a witness on removal, %zu sets not proved",
              retained, removable, not_proved)};
}

Outcome trivial_bounds() {
  SplitMix64 rng(7007);
  std::size_t failures = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Network net = test::small_random_network(seed + 11000, 6, 3, seed % 2 ? Activation::Relu : Activation::Sigmoid, 32);
    const Vector x = test::random_point(net.input_domain(), rng);
    const FeatureGrouping g = FeatureGrouping::singletons(6);
    const auto order = order_features(net, x, g, OrderingPolicy::SensitivityAscending);
    failures += !explain_baseline(net, x, 0.0, g, order).explanation.empty();
    failures += !explain_abstraction_refinement(net, x, 0.0, g, order, ReductionSchedule::uniform(0.1)).explanation.empty();
    const auto all = SufficiencyQuery::make(net, x, {0, 1, 2, 3, 4, 5}, 0.3);
    failures += check_concrete(net, all).kind != VerdictKind::Sufficient;

    const IntervalVector box = test::random_box(net.input_domain(), rng);
    const LayerBounds lb = propagate_box(net, box);
    const AbstractNetwork full = build_abstract(net, lb, 1.0);
    const IntervalVector a = propagate_abstract(full, box);
    failures += !(a.lo() == lb.output().lo() && a.hi() == lb.output().hi());
    const Vector p = test::random_point(box, rng);
    const IntervalVector at = propagate_abstract(full, IntervalVector(p, p));
    const LayerBounds point = propagate_box(net, IntervalVector(p, p));
    failures += !(at.lo() == point.output().lo() && at.hi() == point.output().hi());
  }
  return {failures == 0, fmt("50 seeds, %zu failures", failures)};
}

Outcome performance_proxy() {
  const auto dir = test::temp_dir("acceptance_mnist");
  MnistShapeSpec spec;
  spec.seed = 3;
  spec.instances = 20;
  const Fixture f = make_fixture(spec);
  save_network_file(f.network, dir / "net.json");
  write_csv_instances(f.instances, dir / "x.csv");
  cli::RunConfig c;
  c.network = dir / "net.json";
  c.inputs = {dir / "x.csv"};
  c.epsilon = 1e-4;
  c.out_dir = dir / "bench";
  c.workers = std::max(1u, std::thread::hardware_concurrency());
  std::ostringstream out, err;
  const int code = cli::cmd_bench(c, out, err);
  std::cout << out.str();
  if (code != 0) return {false, fmt("bench exit code %d", code)};

  std::map<std::string, std::map<std::string, double>> neurons;  // instance -> algorithm -> count
  for (const auto& row : read_csv_rows(c.out_dir / "bench.csv")) neurons[row[0]][row[1]] = std::stod(row[5]);
  std::size_t wins = 0;
  for (const auto& [instance, by_alg] : neurons) {
    wins += by_alg.at("abstraction-refinement") <= by_alg.at("baseline");
  }
  double total[2] = {0, 0};
  std::size_t count[2] = {0, 0};
  for (const auto& row : read_csv_rows(c.out_dir / "bench_rho.csv")) {
    if (row[1] != "abstraction-refinement" || std::stoul(row[3]) == 0) continue;
    const double rho = std::stod(row[2]);
    const int slot = rho == 0.1 ? 0 : rho == 1.0 ? 1 : -1;
    if (slot < 0) continue;
    total[slot] += std::stod(row[4]) * std::stod(row[3]);
    count[slot] += std::stoul(row[3]);
  }
  const double t01 = count[0] ? total[0] / count[0] : 0.0;
  const double t10 = count[1] ? total[1] / count[1] : 0.0;
  const bool share = 10 * wins >= 7 * neurons.size();
  const bool timing = count[0] > 0 && count[1] > 0 && t01 < t10;
  return {share && timing,
          fmt("neuron evaluations no higher on %zu of %zu instances; mean query %.3g s at rho 0.1 vs %.3g s at rho 1",
              wins, neurons.size(), t01, t10)};
}

Outcome regression() {
  SplitMix64 rng(9009);
  std::size_t sufficient = 0, falsified = 0, bad_witness = 0, verdicts = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Network net = test::small_random_network(seed + 12000, 3, 1, seed % 2 ? Activation::Relu : Activation::Tanh, 16);
    const Vector x = test::random_point(net.input_domain(), rng);
    for (int trial = 0; trial < 4; ++trial) {
      const double eps = rng.uniform(0.01, 0.2);
      const double delta = rng.uniform(0.005, 0.3);
      const auto q = RegressionQuery::make(net, x, random_subset(3, rng, 0.3), eps, delta);
      const Verdict v = check_regression(net, q);
      ++verdicts;
      const double fx = forward(net, x)[0];
      if (v.witness) bad_witness += !(q.box().contains(*v.witness) && std::abs(forward(net, *v.witness)[0] - fx) > delta);
      if (v.kind != VerdictKind::Sufficient) continue;
      ++sufficient;
      const IntervalVector box = q.box();
      constexpr int kSteps = 24;
      for (int a = 0; a <= kSteps; ++a)
        for (int b = 0; b <= kSteps; ++b)
          for (int c = 0; c <= kSteps; ++c) {
            const int idx[3] = {a, b, c};
            std::vector<double> p(3);
            for (int i = 0; i < 3; ++i) p[i] = box.lo()[i] + (box.hi()[i] - box.lo()[i]) * idx[i] / kSteps;
            falsified += std::abs(test::naive_forward(net, p)[0] - fx) > delta + test::kSlack;
          }
    }
  }
  return {falsified == 0 && bad_witness == 0 && sufficient > 0,
          fmt("%zu verdicts, %zu sufficient, %zu grid points beyond delta, %zu invalid witnesses", verdicts,
              sufficient, falsified, bad_witness)};
}

Outcome determinism() {
  const auto dir = test::temp_dir("acceptance_determinism");
  const Network net = random_network(48, {32, 32}, 5, Activation::Sigmoid, 77);
  save_network_file(net, dir / "net.json");
  write_pnm(vector_to_image(random_instances(48, 1, 77)[0], 4, 4, 3), dir / "x.ppm");
  std::string dumps[2];
  for (int run = 0; run < 2; ++run) {
    cli::RunConfig c;
    c.network = dir / "net.json";
    c.inputs = {dir / "x.ppm"};
    c.groups = cli::GroupMode::Rgb;
    c.order = OrderingPolicy::Random;
    c.seed = 5;
    c.epsilon = 0.05;
    c.out_dir = dir / ("run" + std::to_string(run));
    std::ostringstream out, err;
    if (cli::cmd_explain(c, out, err) != 0) return {false, "explain failed: " + err.str()};
    std::ifstream in(c.out_dir / "report.json");
    nlohmann::json report = nlohmann::json::parse(in);
    test::strip_times(report);
    dumps[run] = report.dump();
  }
  return {dumps[0] == dumps[1], fmt("report size %zu bytes after removing timings", dumps[0].size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"running example", running_example},
      {"soundness", soundness},
      {"containment", containment},
      {"implication chain", implication_chain},
      {"equivalence", equivalence},
      {"minimality", minimality},
      {"trivial bounds", trivial_bounds},
      {"performance proxy", performance_proxy},
      {"regression", regression},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.detail
              << fmt(" (%.1f s)", seconds_since(start)) << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
