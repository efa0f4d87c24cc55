#include "provex/queries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "provex/bounds.hpp"
#include "provex/errors.hpp"
#include "provex/random.hpp"

namespace provex {

namespace {

std::vector<std::size_t> normalize_fixed(std::vector<std::size_t> fixed, std::size_t n) {
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
  if (!fixed.empty() && fixed.back() >= n) {
    throw ValidationError("fixed feature index " + std::to_string(fixed.back()) +
                          " out of range for " + std::to_string(n) + " inputs");
  }
  return fixed;
}

void validate_instance(const Network& net, const Vector& x, double epsilon) {
  if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw DimensionError("instance has " + std::to_string(x.size()) + " features, network expects " +
                         std::to_string(net.input_dim()));
  }
  if (!std::isfinite(epsilon) || epsilon < 0.0) {
    throw ValidationError("epsilon must be finite and >= 0");
  }
  if (!net.input_domain().contains(x)) {
    throw ValidationError("instance lies outside the network's input domain");
  }
}

IntervalVector clamped_box(const Vector& x, const std::vector<std::size_t>& fixed, double epsilon,
                           const IntervalVector& domain) {
  Vector lo = (x.array() - epsilon).max(domain.lo().array());
  Vector hi = (x.array() + epsilon).min(domain.hi().array());
  for (std::size_t i : fixed) {
    lo[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(i)];
    hi[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(i)];
  }
  return IntervalVector(std::move(lo), std::move(hi));
}

// Pushes each coordinate to the end of the box the direction favours; zero
// components stay at the midpoint.
Vector sign_corner(const IntervalVector& box, const Vector& direction) {
  Vector p = box.mid();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (direction[i] > 0.0) p[i] = box.hi()[i];
    if (direction[i] < 0.0) p[i] = box.lo()[i];
  }
  return p;
}

Vector sample(const IntervalVector& box, SplitMix64& rng) {
  Vector p(box.lo().size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p[i] = box.lo()[i] == box.hi()[i] ? box.lo()[i] : rng.uniform(box.lo()[i], box.hi()[i]);
  }
  return p;
}

// Classes other than `target`, by descending logit at `at`; ties by index.
std::vector<std::size_t> runner_ups(const Network& net, const Vector& at, std::size_t target,
                                    std::size_t count) {
  const Vector logits = forward(net, at);
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < static_cast<std::size_t>(logits.size()); ++j) {
    if (j != target) others.push_back(j);
  }
  std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    return logits[static_cast<Eigen::Index>(a)] > logits[static_cast<Eigen::Index>(b)];
  });
  if (others.size() > count) others.resize(count);
  return others;
}

Vector attack_corner(const Network& net, const IntervalVector& box, const Vector& at,
                     std::size_t target, std::size_t rival) {
  Vector direction = Vector::Zero(static_cast<Eigen::Index>(net.output_dim()));
  direction[static_cast<Eigen::Index>(rival)] = 1.0;
  direction[static_cast<Eigen::Index>(target)] = -1.0;
  return sign_corner(box, gradient(net, at, direction));
}

bool has_free_width(const IntervalVector& box) { return (box.width().array() > 0.0).any(); }

}  // namespace

// ---------------------------------------------------------------------------

SufficiencyQuery SufficiencyQuery::make(const Network& net, Vector x, std::vector<std::size_t> fixed,
                                        double epsilon) {
  validate_instance(net, x, epsilon);
  SufficiencyQuery q;
  q.fixed = normalize_fixed(std::move(fixed), net.input_dim());
  q.target = predict(net, x);
  q.x = std::move(x);
  q.epsilon = epsilon;
  q.domain = net.input_domain();
  return q;
}

IntervalVector SufficiencyQuery::box() const { return clamped_box(x, fixed, epsilon, domain); }

std::vector<std::size_t> SufficiencyQuery::free_features() const {
  std::vector<std::size_t> out;
  auto it = fixed.begin();
  for (std::size_t i = 0; i < static_cast<std::size_t>(x.size()); ++i) {
    if (it != fixed.end() && *it == i) {
      ++it;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

RegressionQuery RegressionQuery::make(const Network& net, Vector x, std::vector<std::size_t> fixed,
                                      double epsilon, double delta) {
  if (net.output_dim() != 1) {
    throw UnsupportedError("regression queries need a single-output network");
  }
  validate_instance(net, x, epsilon);
  if (!std::isfinite(delta) || delta <= 0.0) throw ValidationError("delta must be > 0");
  RegressionQuery q;
  q.fixed = normalize_fixed(std::move(fixed), net.input_dim());
  q.x = std::move(x);
  q.epsilon = epsilon;
  q.delta = delta;
  q.domain = net.input_domain();
  return q;
}

IntervalVector RegressionQuery::box() const { return clamped_box(x, fixed, epsilon, domain); }

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Sufficient: return "sufficient";
    case VerdictKind::Uncertain: return "uncertain";
    case VerdictKind::Insufficient: return "insufficient";
  }
  return "?";
}

std::string_view to_string(OracleOutcome outcome) {
  switch (outcome) {
    case OracleOutcome::ProvedSufficient: return "proved_sufficient";
    case OracleOutcome::Witness: return "witness";
    case OracleOutcome::Exhausted: return "exhausted";
  }
  return "?";
}

double enclosure_margin(const IntervalVector& output, std::size_t target) {
  double rival = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < output.size(); ++j) {
    if (j != target) rival = std::max(rival, output.hi()[static_cast<Eigen::Index>(j)]);
  }
  return output.lo()[static_cast<Eigen::Index>(target)] - rival;
}

bool misclassifies(const Network& net, const Vector& point, std::size_t target) {
  return predict(net, point) != target;
}

std::optional<Vector> gen_counterexample(const Network& net, const SufficiencyQuery& q,
                                         const CandidateOptions& options) {
  const IntervalVector box = q.box();
  if (!has_free_width(box)) return std::nullopt;

  for (std::size_t rival : runner_ups(net, q.x, q.target, options.runner_ups)) {
    Vector p = attack_corner(net, box, q.x, q.target, rival);
    if (misclassifies(net, p, q.target)) return p;
  }
  Vector center = box.mid();
  if (misclassifies(net, center, q.target)) return center;

  SplitMix64 rng(options.seed ^ hash_box(box));
  for (std::size_t s = 0; s < options.random_samples; ++s) {
    Vector p = sample(box, rng);
    if (misclassifies(net, p, q.target)) return p;
  }
  return std::nullopt;
}

Verdict check_concrete(const Network& net, const SufficiencyQuery& q,
                       const CandidateOptions& options) {
  const LayerBounds lb = propagate_box(net, q.box());
  Verdict v;
  v.margin = enclosure_margin(lb.output(), q.target);
  if (v.margin >= 0.0) {
    v.kind = VerdictKind::Sufficient;
    return v;
  }
  v.witness = gen_counterexample(net, q, options);
  v.kind = v.witness ? VerdictKind::Insufficient : VerdictKind::Uncertain;
  return v;
}

Verdict check_abstract(const AbstractNetwork& anet, const SufficiencyQuery& q) {
  Verdict v;
  v.margin = enclosure_margin(propagate_abstract(anet, q.box()), q.target);
  v.kind = v.margin >= 0.0 ? VerdictKind::Sufficient : VerdictKind::Uncertain;
  return v;
}

Verdict check_regression(const Network& net, const RegressionQuery& q,
                         const CandidateOptions& options) {
  if (net.output_dim() != 1) {
    throw UnsupportedError("regression queries need a single-output network");
  }
  const IntervalVector box = q.box();
  const double y0 = forward(net, q.x)[0];
  const IntervalVector out = propagate_box(net, box).output();
  Verdict v;
  v.margin = q.delta - std::max(out.hi()[0] - y0, y0 - out.lo()[0]);
  if (v.margin >= 0.0) {
    v.kind = VerdictKind::Sufficient;
    return v;
  }
  v.kind = VerdictKind::Uncertain;
  if (!has_free_width(box)) return v;

  auto deviates = [&](const Vector& p) { return std::abs(forward(net, p)[0] - y0) > q.delta; };
  const Vector g = gradient(net, q.x, std::size_t{0});
  std::vector<Vector> candidates{sign_corner(box, g), sign_corner(box, -g), box.mid()};
  SplitMix64 rng(options.seed ^ hash_box(box));
  for (std::size_t s = 0; s < options.random_samples; ++s) candidates.push_back(sample(box, rng));
  for (Vector& p : candidates) {
    if (deviates(p)) {
      v.kind = VerdictKind::Insufficient;
      v.witness = std::move(p);
      break;
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

namespace {

struct PendingBox {
  double margin;
  std::size_t sequence;
  IntervalVector box;
};

struct MostViolatedFirst {
  bool operator()(const PendingBox& a, const PendingBox& b) const {
    if (a.margin != b.margin) return a.margin > b.margin;
    return a.sequence > b.sequence;
  }
};

// Range of the activation's derivative over a layer, read off its
// post-activation bounds.
void derivative_range(Activation kind, const IntervalVector& post, Vector& lo, Vector& hi) {
  const Vector& a = post.lo();
  const Vector& b = post.hi();
  switch (kind) {
    case Activation::Relu:
      lo = (a.array() > 0.0).cast<double>();
      hi = (b.array() > 0.0).cast<double>();
      break;
    case Activation::Sigmoid: {
      const Eigen::ArrayXd da = a.array() * (1.0 - a.array());
      const Eigen::ArrayXd db = b.array() * (1.0 - b.array());
      lo = da.min(db);
      hi = (a.array() <= 0.5 && b.array() >= 0.5).select(0.25, da.max(db));
      break;
    }
    case Activation::Tanh: {
      const Eigen::ArrayXd da = 1.0 - a.array().square();
      const Eigen::ArrayXd db = 1.0 - b.array().square();
      lo = da.min(db);
      hi = (a.array() <= 0.0 && b.array() >= 0.0).select(1.0, da.max(db));
      break;
    }
    case Activation::Identity:
      lo = Vector::Ones(post.lo().size());
      hi = lo;
      break;
  }
}

// Lower bound on min over rivals j of y_t - y_j across the box. Each rival
// takes the better of the plain interval bound and the mean-value form
// m(c) - sum_i max|dm/dx_i| * r_i, whose gradient range comes from a backward
// interval pass.
double oracle_margin(const Network& net, const IntervalVector& box, std::size_t target) {
  const LayerBounds lb = propagate_box(net, box);
  const Vector center = box.mid();
  const Vector yc = forward(net, center);
  const Vector radius = 0.5 * box.width();
  const IntervalVector& out = lb.output();
  const auto t = static_cast<Eigen::Index>(target);
  std::vector<Vector> dlo(net.layer_count()), dhi(net.layer_count());
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    derivative_range(net.layer(k).activation, lb.per_layer[k], dlo[k], dhi[k]);
  }
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < out.lo().size(); ++j) {
    if (j == t) continue;
    double bound = out.lo()[t] - out.hi()[j];
    Vector glo = Vector::Zero(out.lo().size());
    glo[t] = 1.0;
    glo[j] = -1.0;
    Vector ghi = glo;
    for (std::size_t k = net.layer_count(); k-- > 0;) {
      const Vector plo = glo.cwiseProduct(dlo[k]).cwiseMin(glo.cwiseProduct(dhi[k]));
      const Vector phi = ghi.cwiseProduct(dlo[k]).cwiseMax(ghi.cwiseProduct(dhi[k]));
      const Matrix& w = net.layer(k).weights;
      const Matrix pos = w.cwiseMax(0.0);
      const Matrix neg = w.cwiseMin(0.0);
      glo = pos.transpose() * plo + neg.transpose() * phi;
      ghi = pos.transpose() * phi + neg.transpose() * plo;
    }
    const double spread = glo.cwiseAbs().cwiseMax(ghi.cwiseAbs()).dot(radius);
    bound = std::max(bound, yc[t] - yc[j] - spread);
    margin = std::min(margin, bound);
  }
  return margin;
}

}  // namespace

OracleResult oracle_check(const Network& net, const SufficiencyQuery& q, std::size_t budget) {
  OracleResult result;
  std::priority_queue<PendingBox, std::vector<PendingBox>, MostViolatedFirst> open;
  std::size_t sequence = 0;

  // Returns true when a witness was found.
  auto examine = [&](IntervalVector box) {
    ++result.boxes_evaluated;
    const double margin = oracle_margin(net, box, q.target);
    if (margin >= 0.0) return false;
    const Vector center = box.mid();
    std::vector<Vector> samples{center};
    if (has_free_width(box)) {
      for (std::size_t rival : runner_ups(net, center, q.target, 2)) {
        samples.push_back(attack_corner(net, box, center, q.target, rival));
      }
    }
    for (Vector& p : samples) {
      if (misclassifies(net, p, q.target)) {
        result.outcome = OracleOutcome::Witness;
        result.witness = std::move(p);
        return true;
      }
    }
    if (has_free_width(box)) open.push({margin, sequence++, std::move(box)});
    return false;
  };

  if (examine(q.box())) return result;
  while (!open.empty()) {
    if (result.splits >= budget) {
      result.outcome = OracleOutcome::Exhausted;
      return result;
    }
    PendingBox top = open.top();
    open.pop();
    Eigen::Index dim = 0;
    top.box.width().maxCoeff(&dim);
    const double lo = top.box.lo()[dim];
    const double hi = top.box.hi()[dim];
    const double mid = 0.5 * (lo + hi);
    ++result.splits;

    Vector left_hi = top.box.hi();
    left_hi[dim] = mid;
    Vector right_lo = top.box.lo();
    right_lo[dim] = mid;
    if (examine(IntervalVector(top.box.lo(), std::move(left_hi)))) return result;
    if (examine(IntervalVector(std::move(right_lo), top.box.hi()))) return result;
  }
  result.outcome = OracleOutcome::ProvedSufficient;
  return result;
}

}  // namespace provex
