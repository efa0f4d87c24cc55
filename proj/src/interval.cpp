#include "provex/interval.hpp"

#include <cmath>
#include <string>

#include "provex/errors.hpp"

namespace provex {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

}  // namespace

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
  if (!(lo_ <= hi_)) {
    throw ValidationError("interval with lo > hi or NaN endpoint: [" + std::to_string(lo_) + ", " +
                          std::to_string(hi_) + "]");
  }
}

IntervalVector::IntervalVector(std::size_t n)
    : lo_(Vector::Zero(static_cast<Eigen::Index>(n))),
      hi_(Vector::Zero(static_cast<Eigen::Index>(n))) {}

IntervalVector::IntervalVector(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  require_same_size(static_cast<std::size_t>(lo_.size()), static_cast<std::size_t>(hi_.size()),
                    "interval vector endpoints");
  for (Eigen::Index i = 0; i < lo_.size(); ++i) {
    if (!(lo_[i] <= hi_[i])) {
      throw ValidationError("interval vector entry " + std::to_string(i) + " has lo > hi");
    }
  }
}

IntervalVector::IntervalVector(std::initializer_list<Interval> items)
    : IntervalVector(std::vector<Interval>(items)) {}

IntervalVector::IntervalVector(const std::vector<Interval>& items)
    : lo_(static_cast<Eigen::Index>(items.size())), hi_(static_cast<Eigen::Index>(items.size())) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    lo_[static_cast<Eigen::Index>(i)] = items[i].lo;
    hi_[static_cast<Eigen::Index>(i)] = items[i].hi;
  }
}

IntervalVector IntervalVector::uniform(std::size_t n, Interval item) {
  const auto size = static_cast<Eigen::Index>(n);
  return IntervalVector(Vector::Constant(size, item.lo), Vector::Constant(size, item.hi),
                        Unchecked{});
}

void IntervalVector::set(std::size_t i, Interval item) {
  lo_[static_cast<Eigen::Index>(i)] = item.lo;
  hi_[static_cast<Eigen::Index>(i)] = item.hi;
}

bool IntervalVector::contains(const Vector& p, double slack) const {
  require_same_size(size(), static_cast<std::size_t>(p.size()), "containment test");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(lo_[i] - slack <= p[i] && p[i] <= hi_[i] + slack)) return false;
  }
  return true;
}

IntervalVector iv_add(const IntervalVector& a, const IntervalVector& b) {
  require_same_size(a.size(), b.size(), "iv_add");
  return IntervalVector(a.lo_ + b.lo_, a.hi_ + b.hi_, IntervalVector::Unchecked{});
}

IntervalVector iv_affine(const Matrix& weights, const IntervalVector& bias,
                         const IntervalVector& v) {
  require_same_size(static_cast<std::size_t>(weights.cols()), v.size(), "iv_affine input");
  require_same_size(static_cast<std::size_t>(weights.rows()), bias.size(), "iv_affine bias");
  if (!weights.allFinite()) {
    throw ValidationError("iv_affine: non-finite weight");
  }
  const Eigen::Index rows = weights.rows();
  Vector lo(rows);
  Vector hi(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double acc_lo = 0.0;
    double acc_hi = 0.0;
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      const double w = weights(i, j);
      if (w >= 0.0) {
        acc_lo += w * v.lo_[j];
        acc_hi += w * v.hi_[j];
      } else {
        acc_lo += w * v.hi_[j];
        acc_hi += w * v.lo_[j];
      }
    }
    lo[i] = acc_lo + bias.lo_[i];
    hi[i] = acc_hi + bias.hi_[i];
  }
  return IntervalVector(std::move(lo), std::move(hi), IntervalVector::Unchecked{});
}

IntervalVector iv_activation(Activation kind, const IntervalVector& v) {
  if (kind == Activation::Identity) return v;
  Vector lo = v.lo_.unaryExpr([kind](double e) { return apply(kind, e); });
  Vector hi = v.hi_.unaryExpr([kind](double e) { return apply(kind, e); });
  return IntervalVector(std::move(lo), std::move(hi), IntervalVector::Unchecked{});
}

bool iv_subset(const IntervalVector& a, const IntervalVector& b, double slack) {
  require_same_size(a.size(), b.size(), "iv_subset");
  if (slack < 0.0) throw ValidationError("iv_subset: negative slack");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (!(b.lo()[k] - slack <= a.lo()[k] && a.hi()[k] <= b.hi()[k] + slack)) return false;
  }
  return true;
}

SplitWeights::SplitWeights(const Matrix& weights)
    : positive(weights.cwiseMax(0.0)), negative(weights.cwiseMin(0.0)) {}

IntervalVector SplitWeights::affine(const IntervalVector& bias, const IntervalVector& v) const {
  require_same_size(static_cast<std::size_t>(positive.cols()), v.size(), "affine input");
  require_same_size(static_cast<std::size_t>(positive.rows()), bias.size(), "affine bias");
  Vector lo = positive * v.lo_ + negative * v.hi_ + bias.lo_;
  Vector hi = positive * v.hi_ + negative * v.lo_ + bias.hi_;
  return IntervalVector(std::move(lo), std::move(hi), IntervalVector::Unchecked{});
}

}  // namespace provex
