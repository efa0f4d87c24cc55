#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

#include "provex/activation.hpp"

namespace provex {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Closed real interval [lo, hi]. Degenerate intervals represent points.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  // Throws ValidationError unless lo <= hi (NaN endpoints are rejected too).
  Interval(double lo, double hi);

  static Interval point(double v) { return Interval(v, v); }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool is_point() const { return lo == hi; }
  bool contains(double v, double slack = 0.0) const {
    return lo - slack <= v && v <= hi + slack;
  }

  friend bool operator==(const Interval&, const Interval&) = default;
};

// Axis-aligned box stored as two endpoint vectors so the propagation hot loop
// can work on contiguous memory.
class IntervalVector {
 public:
  IntervalVector() = default;
  explicit IntervalVector(std::size_t n);  // n copies of [0, 0]
  IntervalVector(Vector lo, Vector hi);    // validates lo <= hi elementwise
  IntervalVector(std::initializer_list<Interval> items);
  explicit IntervalVector(const std::vector<Interval>& items);

  static IntervalVector point(const Vector& v) { return IntervalVector(v, v); }
  static IntervalVector uniform(std::size_t n, Interval item);

  std::size_t size() const { return static_cast<std::size_t>(lo_.size()); }
  Interval operator[](std::size_t i) const { return Interval(lo_[i], hi_[i]); }
  void set(std::size_t i, Interval item);

  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }
  Vector mid() const { return 0.5 * (lo_ + hi_); }
  Vector width() const { return hi_ - lo_; }
  bool is_point() const { return lo_ == hi_; }
  bool contains(const Vector& p, double slack = 0.0) const;

  friend bool operator==(const IntervalVector& a, const IntervalVector& b) {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  // Unchecked constructor used by the arithmetic kernels.
  struct Unchecked {};
  IntervalVector(Vector lo, Vector hi, Unchecked) : lo_(std::move(lo)), hi_(std::move(hi)) {}

  friend IntervalVector iv_add(const IntervalVector&, const IntervalVector&);
  friend IntervalVector iv_affine(const Matrix&, const IntervalVector&, const IntervalVector&);
  friend IntervalVector iv_activation(Activation, const IntervalVector&);
  friend struct SplitWeights;

  Vector lo_;
  Vector hi_;
};

// Minkowski sum of two boxes.
IntervalVector iv_add(const IntervalVector& a, const IntervalVector& b);

// Tightest box enclosing {W v + b : v in box, b in bias box}. Scalar-interval
// products split on the sign of the weight.
IntervalVector iv_affine(const Matrix& weights, const IntervalVector& bias,
                         const IntervalVector& v);

// Exact image of a box under an elementwise monotone activation.
IntervalVector iv_activation(Activation kind, const IntervalVector& v);

// a is inside b, up to `slack` on every endpoint.
bool iv_subset(const IntervalVector& a, const IntervalVector& b, double slack = 0.0);

// Positive and negative parts of a weight matrix. Propagation through a split
// matrix is two dense mat-vec products per endpoint and gives the same
// enclosure as iv_affine.
struct SplitWeights {
  Matrix positive;
  Matrix negative;

  SplitWeights() = default;
  explicit SplitWeights(const Matrix& weights);

  IntervalVector affine(const IntervalVector& bias, const IntervalVector& v) const;
};

}  // namespace provex
