#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "provex/abstraction.hpp"
#include "provex/network.hpp"
#include "provex/queries.hpp"

namespace provex {

// Partition of the input features into the units an explanation is made of.
class FeatureGrouping {
 public:
  explicit FeatureGrouping(std::vector<std::vector<std::size_t>> groups, std::size_t feature_count);

  static FeatureGrouping singletons(std::size_t feature_count);
  // Interleaved channels (HWC): pixel p owns features [p*channels, (p+1)*channels).
  static FeatureGrouping pixels(std::size_t feature_count, std::size_t channels);

  std::size_t size() const { return groups_.size(); }
  std::size_t feature_count() const { return feature_count_; }
  const std::vector<std::size_t>& group(std::size_t g) const { return groups_.at(g); }
  const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }

  // Union of the features of the given groups, sorted.
  std::vector<std::size_t> features_of(const std::vector<std::size_t>& group_ids) const;

 private:
  std::vector<std::vector<std::size_t>> groups_;
  std::size_t feature_count_ = 0;
};

enum class OrderingPolicy { SensitivityAscending, InOrder, Random };

struct FeatureOrdering {
  OrderingPolicy policy = OrderingPolicy::SensitivityAscending;
  std::vector<std::size_t> resolved;  // permutation of group indices
};

// Sensitivity of a group is sum |d logit_target / dx_i| over its features,
// taken at x for the predicted class.
FeatureOrdering order_features(const Network& net, const Vector& x, const FeatureGrouping& grouping,
                               OrderingPolicy policy, std::uint64_t seed = 0);

enum class Backend { Enclosure, Oracle };

enum class Decision { Removed, Pinned, Refined };
std::string_view to_string(Decision decision);

enum class RunStatus { MinimalSufficient, SufficientEarlyStop };
std::string_view to_string(RunStatus status);

// One verification query.
struct StepRecord {
  std::size_t group = 0;
  double rho = 1.0;
  VerdictKind verdict = VerdictKind::Uncertain;
  Decision decision = Decision::Pinned;
  bool witness = false;  // a concrete counterexample decided this step
  double elapsed_seconds = 0.0;  // the check itself
  double search_seconds = 0.0;   // counterexample search or oracle, if run
  double build_seconds = 0.0;    // building the abstraction, if not cached
  double margin = 0.0;
  std::size_t neurons = 0;  // neurons in the network the query ran on
  std::size_t explanation_size = 0;  // after the step
};

struct Snapshot {
  double rho = 1.0;
  bool reached = false;
  std::vector<std::size_t> explanation;  // group indices, sorted
};

struct ExplanationTrace {
  std::size_t groups = 0;
  std::size_t target = 0;
  std::vector<std::size_t> order;
  std::vector<StepRecord> steps;
  // One per schedule level: the explanation when that level was last active.
  // Levels never reached hold the set the run ended with.
  std::vector<Snapshot> snapshots;
  std::vector<std::size_t> final;
  RunStatus status = RunStatus::MinimalSufficient;
  std::size_t refinements = 0;
  // Neuron evaluations spent computing merge bounds (not tied to one query).
  std::size_t bounds_passes = 0;
  std::size_t bounds_neurons = 0;
  double bounds_seconds = 0.0;
};

struct ExplainOptions {
  Backend backend = Backend::Enclosure;
  CandidateOptions candidates;
  std::size_t oracle_budget = std::size_t{1} << 16;
  std::optional<std::chrono::duration<double>> timeout;
  // Abstraction-refinement only: how many upcoming groups (in traversal
  // order) are freed in the box the merge bounds are computed on. The bounds
  // stay valid for that many queries. 0 frees every remaining group.
  std::size_t bounds_window = 16;
};

struct ExplanationResult {
  std::vector<std::size_t> explanation;  // group indices, sorted
  ExplanationTrace trace;
};

// Greedy deletion: try to free each group in order, keep it only when the
// backend cannot certify the smaller set.
ExplanationResult explain_baseline(const Network& net, const Vector& x, double epsilon,
                                   const FeatureGrouping& grouping, const FeatureOrdering& ordering,
                                   const ExplainOptions& options = {});

// Greedy deletion over abstract networks. Each group is first checked on the
// current abstraction; an inconclusive check looks for a concrete
// counterexample and otherwise refines to the next schedule level. The level
// reached is kept for the following groups.
ExplanationResult explain_abstraction_refinement(const Network& net, const Vector& x,
                                                 double epsilon, const FeatureGrouping& grouping,
                                                 const FeatureOrdering& ordering,
                                                 const ReductionSchedule& schedule,
                                                 const ExplainOptions& options = {});

struct WorkReport {
  std::size_t features = 0;
  std::size_t refinements = 0;
  std::size_t queries = 0;
  std::vector<std::pair<double, std::size_t>> queries_per_rho;
  std::vector<std::pair<double, double>> mean_query_seconds_per_rho;
  std::size_t query_neurons = 0;
  std::size_t neuron_evaluations = 0;  // query_neurons + trace.bounds_neurons
};

WorkReport count_work(const ExplanationTrace& trace);

}  // namespace provex
