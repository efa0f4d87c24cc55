#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "provex/abstract_network.hpp"
#include "provex/interval.hpp"
#include "provex/network.hpp"

namespace provex {

// <f, x, S, eps> with the l-infinity ball clamped to the input domain.
struct SufficiencyQuery {
  Vector x;
  std::vector<std::size_t> fixed;  // S, sorted and unique
  double epsilon = 0.0;
  std::size_t target = 0;
  IntervalVector domain;

  // Validates dimensions and computes target = predict(net, x).
  static SufficiencyQuery make(const Network& net, Vector x, std::vector<std::size_t> fixed,
                               double epsilon);

  // Fixed features are pinned to x; free ones range over
  // [max(domain.lo, x - eps), min(domain.hi, x + eps)].
  IntervalVector box() const;
  std::vector<std::size_t> free_features() const;
};

// Scalar-output variant: |f(x_S; x~) - f(x)| <= delta.
struct RegressionQuery {
  Vector x;
  std::vector<std::size_t> fixed;
  double epsilon = 0.0;
  double delta = 0.0;
  IntervalVector domain;

  static RegressionQuery make(const Network& net, Vector x, std::vector<std::size_t> fixed,
                              double epsilon, double delta);
  IntervalVector box() const;
};

enum class VerdictKind { Sufficient, Uncertain, Insufficient };
std::string_view to_string(VerdictKind kind);

struct Verdict {
  VerdictKind kind = VerdictKind::Uncertain;
  // lo_t - max_{j != t} hi_j of the enclosure used (regression: delta minus
  // the largest deviation of the enclosure from f(x)).
  double margin = 0.0;
  // Present only for Insufficient; a point of the query box that the concrete
  // network misclassifies.
  std::optional<Vector> witness;
};

// Candidate points tried when an enclosure is inconclusive.
struct CandidateOptions {
  std::size_t runner_ups = 2;
  std::size_t random_samples = 64;
  std::uint64_t seed = 0;
};

// lo_t - max_{j != t} hi_j. +infinity for single-output networks.
double enclosure_margin(const IntervalVector& output, std::size_t target);

// Target loses under the lowest-index argmax rule.
bool misclassifies(const Network& net, const Vector& point, std::size_t target);

Verdict check_concrete(const Network& net, const SufficiencyQuery& q,
                       const CandidateOptions& options = {});

// Enclosure-only check on an abstract network: Sufficient or Uncertain.
Verdict check_abstract(const AbstractNetwork& anet, const SufficiencyQuery& q);

Verdict check_regression(const Network& net, const RegressionQuery& q,
                         const CandidateOptions& options = {});

// Evaluates on the concrete network, in order: one gradient-sign corner for
// each of the top runner-up classes at x, the box center, then seeded uniform
// samples. Returns the first misclassified point.
std::optional<Vector> gen_counterexample(const Network& net, const SufficiencyQuery& q,
                                         const CandidateOptions& options = {});

enum class OracleOutcome { ProvedSufficient, Witness, Exhausted };
std::string_view to_string(OracleOutcome outcome);

struct OracleResult {
  OracleOutcome outcome = OracleOutcome::Exhausted;
  std::optional<Vector> witness;
  std::size_t splits = 0;
  std::size_t boxes_evaluated = 0;
};

// Branch and bound over the free dimensions: bisect the widest free dimension
// until every sub-box is certified by its enclosure or a sampled point
// misclassifies. `budget` caps the number of bisections.
OracleResult oracle_check(const Network& net, const SufficiencyQuery& q, std::size_t budget);

}  // namespace provex
