#include "provex/explain.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "provex/bounds.hpp"
#include "provex/errors.hpp"
#include "provex/random.hpp"

namespace provex {

FeatureGrouping::FeatureGrouping(std::vector<std::vector<std::size_t>> groups,
                                 std::size_t feature_count)
    : groups_(std::move(groups)), feature_count_(feature_count) {
  std::vector<char> seen(feature_count, 0);
  std::size_t total = 0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].empty()) throw ValidationError("group " + std::to_string(g) + " is empty");
    for (std::size_t i : groups_[g]) {
      if (i >= feature_count || seen[i]) {
        throw ValidationError("groups must partition the " + std::to_string(feature_count) +
                              " features; feature " + std::to_string(i) + " is out of range or repeated");
      }
      seen[i] = 1;
      ++total;
    }
    std::sort(groups_[g].begin(), groups_[g].end());
  }
  if (total != feature_count) {
    throw ValidationError("groups cover " + std::to_string(total) + " of " +
                          std::to_string(feature_count) + " features");
  }
}

FeatureGrouping FeatureGrouping::singletons(std::size_t feature_count) {
  std::vector<std::vector<std::size_t>> groups(feature_count);
  for (std::size_t i = 0; i < feature_count; ++i) groups[i] = {i};
  return FeatureGrouping(std::move(groups), feature_count);
}

FeatureGrouping FeatureGrouping::pixels(std::size_t feature_count, std::size_t channels) {
  if (channels == 0 || feature_count % channels != 0) {
    throw ValidationError(std::to_string(feature_count) + " features do not split into pixels of " +
                          std::to_string(channels) + " channels");
  }
  std::vector<std::vector<std::size_t>> groups(feature_count / channels);
  for (std::size_t p = 0; p < groups.size(); ++p) {
    for (std::size_t c = 0; c < channels; ++c) groups[p].push_back(p * channels + c);
  }
  return FeatureGrouping(std::move(groups), feature_count);
}

std::vector<std::size_t> FeatureGrouping::features_of(const std::vector<std::size_t>& group_ids) const {
  std::vector<std::size_t> out;
  for (std::size_t g : group_ids) {
    const auto& members = group(g);
    out.insert(out.end(), members.begin(), members.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FeatureOrdering order_features(const Network& net, const Vector& x, const FeatureGrouping& grouping,
                               OrderingPolicy policy, std::uint64_t seed) {
  if (grouping.feature_count() != net.input_dim()) {
    throw DimensionError("grouping covers " + std::to_string(grouping.feature_count()) +
                         " features, network expects " + std::to_string(net.input_dim()));
  }
  FeatureOrdering ordering;
  ordering.policy = policy;
  ordering.resolved.resize(grouping.size());
  std::iota(ordering.resolved.begin(), ordering.resolved.end(), std::size_t{0});

  switch (policy) {
    case OrderingPolicy::InOrder:
      break;
    case OrderingPolicy::Random: {
      SplitMix64 rng(seed);
      auto& r = ordering.resolved;
      for (std::size_t i = r.size(); i > 1; --i) std::swap(r[i - 1], r[rng.below(i)]);
      break;
    }
    case OrderingPolicy::SensitivityAscending: {
      const Vector g = gradient(net, x, predict(net, x)).cwiseAbs();
      std::vector<double> sensitivity(grouping.size(), 0.0);
      for (std::size_t k = 0; k < grouping.size(); ++k) {
        for (std::size_t i : grouping.group(k)) sensitivity[k] += g[static_cast<Eigen::Index>(i)];
      }
      std::stable_sort(ordering.resolved.begin(), ordering.resolved.end(),
                       [&](std::size_t a, std::size_t b) { return sensitivity[a] < sensitivity[b]; });
      break;
    }
  }
  return ordering;
}

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::Removed: return "removed";
    case Decision::Pinned: return "pinned";
    case Decision::Refined: return "refined";
  }
  return "?";
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::MinimalSufficient: return "MinimalSufficient";
    case RunStatus::SufficientEarlyStop: return "SufficientEarlyStop";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Current explanation S as a membership mask over groups.
class Explanation {
 public:
  explicit Explanation(std::size_t groups) : member_(groups, 1), size_(groups) {}

  void remove(std::size_t g) {
    member_[g] = 0;
    --size_;
  }
  bool contains(std::size_t g) const { return member_[g] != 0; }
  std::size_t size() const { return size_; }

  std::vector<std::size_t> ids_without(std::size_t excluded) const {
    std::vector<std::size_t> ids;
    for (std::size_t g = 0; g < member_.size(); ++g) {
      if (member_[g] && g != excluded) ids.push_back(g);
    }
    return ids;
  }
  std::vector<std::size_t> ids() const { return ids_without(member_.size()); }

 private:
  std::vector<char> member_;
  std::size_t size_;
};

class Deadline {
 public:
  Deadline(Clock::time_point start, const ExplainOptions& options)
      : start_(start), timeout_(options.timeout) {}
  bool passed() const { return timeout_ && seconds_since(start_) >= timeout_->count(); }

 private:
  Clock::time_point start_;
  std::optional<std::chrono::duration<double>> timeout_;
};

void validate_run(const Network& net, const Vector& x, const FeatureGrouping& grouping,
                  const FeatureOrdering& ordering) {
  if (grouping.feature_count() != net.input_dim() ||
      static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw DimensionError("instance, grouping and network disagree on the number of features");
  }
  std::vector<char> seen(grouping.size(), 0);
  if (ordering.resolved.size() != grouping.size()) {
    throw ValidationError("ordering must be a permutation of the " + std::to_string(grouping.size()) +
                          " groups");
  }
  for (std::size_t g : ordering.resolved) {
    if (g >= grouping.size() || seen[g]) {
      throw ValidationError("ordering must be a permutation of the " +
                            std::to_string(grouping.size()) + " groups");
    }
    seen[g] = 1;
  }
}

VerdictKind verdict_of(OracleOutcome outcome) {
  switch (outcome) {
    case OracleOutcome::ProvedSufficient: return VerdictKind::Sufficient;
    case OracleOutcome::Witness: return VerdictKind::Insufficient;
    case OracleOutcome::Exhausted: return VerdictKind::Uncertain;
  }
  return VerdictKind::Uncertain;
}

// Complete check of S \ {g} with the oracle; fills verdict, decision and cost.
void decide_with_oracle(const Network& net, const SufficiencyQuery& q, const ExplainOptions& options,
                        StepRecord& step) {
  const auto start = Clock::now();
  const OracleResult r = oracle_check(net, q, options.oracle_budget);
  step.search_seconds += seconds_since(start);
  step.verdict = verdict_of(r.outcome);
  step.witness = r.outcome == OracleOutcome::Witness;
  step.decision = r.outcome == OracleOutcome::ProvedSufficient ? Decision::Removed : Decision::Pinned;
  step.neurons = net.neuron_count() * r.boxes_evaluated;
}

ExplanationTrace new_trace(const Network& net, const Vector& x, const FeatureGrouping& grouping,
                           const FeatureOrdering& ordering) {
  ExplanationTrace trace;
  trace.groups = grouping.size();
  trace.target = predict(net, x);
  trace.order = ordering.resolved;
  return trace;
}

}  // namespace

ExplanationResult explain_baseline(const Network& net, const Vector& x, double epsilon,
                                   const FeatureGrouping& grouping, const FeatureOrdering& ordering,
                                   const ExplainOptions& options) {
  validate_run(net, x, grouping, ordering);
  const Deadline deadline(Clock::now(), options);
  ExplanationTrace trace = new_trace(net, x, grouping, ordering);
  Explanation s(grouping.size());

  for (std::size_t g : ordering.resolved) {
    if (deadline.passed()) {
      trace.status = RunStatus::SufficientEarlyStop;
      break;
    }
    const auto q = SufficiencyQuery::make(net, x, grouping.features_of(s.ids_without(g)), epsilon);
    StepRecord step;
    step.group = g;
    step.rho = 1.0;
    if (options.backend == Backend::Oracle) {
      const auto start = Clock::now();
      step.margin = enclosure_margin(propagate_box(net, q.box()).output(), q.target);
      step.elapsed_seconds = seconds_since(start);
      decide_with_oracle(net, q, options, step);
    } else {
      const auto start = Clock::now();
      const Verdict v = check_concrete(net, q, options.candidates);
      step.elapsed_seconds = seconds_since(start);
      step.verdict = v.kind;
      step.margin = v.margin;
      step.witness = v.witness.has_value();
      step.decision = v.kind == VerdictKind::Sufficient ? Decision::Removed : Decision::Pinned;
      step.neurons = net.neuron_count();
    }
    if (step.decision == Decision::Removed) s.remove(g);
    step.explanation_size = s.size();
    trace.steps.push_back(step);
  }

  trace.final = s.ids();
  trace.snapshots.push_back({1.0, true, trace.final});
  return {trace.final, std::move(trace)};
}

ExplanationResult explain_abstraction_refinement(const Network& net, const Vector& x,
                                                 double epsilon, const FeatureGrouping& grouping,
                                                 const FeatureOrdering& ordering,
                                                 const ReductionSchedule& schedule,
                                                 const ExplainOptions& options) {
  validate_run(net, x, grouping, ordering);
  const Deadline deadline(Clock::now(), options);
  ExplanationTrace trace = new_trace(net, x, grouping, ordering);
  Explanation s(grouping.size());

  const std::size_t hidden = net.hidden_neuron_count();
  const std::size_t last = schedule.size() - 1;
  const auto& order = ordering.resolved;
  std::size_t level = 0;
  trace.snapshots.resize(schedule.size());
  for (std::size_t l = 0; l < schedule.size(); ++l) trace.snapshots[l].rho = schedule[l];
  trace.snapshots[0].reached = true;

  // Merge bounds are computed on a box that frees the already-removed groups
  // and the next `bounds_window` groups, so they stay sound for that many
  // queries.
  std::optional<LayerBounds> lb;
  std::size_t lb_valid_until = 0;
  std::vector<std::optional<AbstractNetwork>> cache(schedule.size());

  auto refresh_bounds = [&](std::size_t pos) {
    const std::size_t end = options.bounds_window == 0
                                ? order.size()
                                : std::min(order.size(), pos + options.bounds_window);
    std::vector<char> free(grouping.size(), 0);
    for (std::size_t g = 0; g < grouping.size(); ++g) free[g] = !s.contains(g);
    for (std::size_t p = pos; p < end; ++p) free[order[p]] = 1;
    std::vector<std::size_t> pinned;
    for (std::size_t g = 0; g < grouping.size(); ++g) {
      if (!free[g]) pinned.push_back(g);
    }
    const auto start = Clock::now();
    const auto window = SufficiencyQuery::make(net, x, grouping.features_of(pinned), epsilon);
    lb = propagate_box(net, window.box());
    trace.bounds_seconds += seconds_since(start);
    ++trace.bounds_passes;
    trace.bounds_neurons += net.neuron_count();
    lb_valid_until = end;
    for (auto& entry : cache) entry.reset();
  };

  auto abstraction_at = [&](std::size_t l) -> const AbstractNetwork& {
    if (!cache[l]) {
      if (l > 0 && cache[l - 1]) {
        cache[l] = refine(net, *cache[l - 1], *lb, schedule[l]);
      } else {
        cache[l] = build_abstract(net, *lb, schedule[l]);
      }
    }
    return *cache[l];
  };

  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (deadline.passed()) {
      trace.status = RunStatus::SufficientEarlyStop;
      break;
    }
    const std::size_t g = order[pos];
    const auto q = SufficiencyQuery::make(net, x, grouping.features_of(s.ids_without(g)), epsilon);
    bool searched = false;
    bool stop = false;

    while (true) {
      StepRecord step;
      step.group = g;
      step.rho = schedule[level];
      const bool exact = kept_neuron_count(hidden, schedule[level]) == hidden;

      if (exact) {
        const auto start = Clock::now();
        step.margin = enclosure_margin(propagate_box(net, q.box()).output(), q.target);
        step.elapsed_seconds = seconds_since(start);
        step.neurons = net.neuron_count();
      } else {
        if (!lb || pos >= lb_valid_until) refresh_bounds(pos);
        const auto build_start = Clock::now();
        const bool cached = cache[level].has_value();
        const AbstractNetwork& anet = abstraction_at(level);
        if (!cached) step.build_seconds = seconds_since(build_start);
        const auto start = Clock::now();
        step.margin = check_abstract(anet, q).margin;
        step.elapsed_seconds = seconds_since(start);
        step.neurons = anet.neuron_count();
      }
      step.verdict = step.margin >= 0.0 ? VerdictKind::Sufficient : VerdictKind::Uncertain;

      if (step.verdict == VerdictKind::Sufficient) {
        step.decision = Decision::Removed;
      } else if (!searched) {
        // The candidates depend only on the concrete network and the query
        // box, so one search per group is enough.
        searched = true;
        const auto start = Clock::now();
        auto witness = gen_counterexample(net, q, options.candidates);
        step.search_seconds = seconds_since(start);
        if (witness) {
          step.verdict = VerdictKind::Insufficient;
          step.witness = true;
          step.decision = Decision::Pinned;
        }
      }

      if (step.verdict == VerdictKind::Uncertain) {
        if (exact || level == last) {
          if (options.backend == Backend::Oracle) {
            decide_with_oracle(net, q, options, step);
          } else {
            step.decision = Decision::Pinned;
          }
        } else {
          step.decision = Decision::Refined;
        }
      }

      if (step.decision == Decision::Removed) s.remove(g);
      step.explanation_size = s.size();
      trace.steps.push_back(step);
      trace.snapshots[level].explanation = s.ids();
      if (step.decision != Decision::Refined) break;

      spdlog::debug("group {}: refining rho {} -> {}", g, schedule[level], schedule[level + 1]);
      ++level;
      ++trace.refinements;
      trace.snapshots[level].reached = true;
      if (deadline.passed()) {
        stop = true;
        break;
      }
    }
    if (stop) {
      trace.status = RunStatus::SufficientEarlyStop;
      break;
    }
  }

  trace.final = s.ids();
  // Every level below `level` was left after a step there, which recorded it.
  for (std::size_t l = level; l < schedule.size(); ++l) trace.snapshots[l].explanation = trace.final;
  return {trace.final, std::move(trace)};
}

WorkReport count_work(const ExplanationTrace& trace) {
  WorkReport report;
  report.features = trace.groups;
  report.refinements = trace.refinements;
  report.queries = trace.steps.size();
  std::map<double, std::pair<std::size_t, double>> per_rho;
  for (const StepRecord& step : trace.steps) {
    auto& [count, seconds] = per_rho[step.rho];
    ++count;
    seconds += step.elapsed_seconds;
    report.query_neurons += step.neurons;
  }
  for (const auto& [rho, entry] : per_rho) {
    report.queries_per_rho.emplace_back(rho, entry.first);
    report.mean_query_seconds_per_rho.emplace_back(rho, entry.second / static_cast<double>(entry.first));
  }
  report.neuron_evaluations = report.query_neurons + trace.bounds_neurons;
  return report;
}

}  // namespace provex
