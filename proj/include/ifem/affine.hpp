#pragma once

#include <Eigen/Dense>

namespace ifem {

// Affine scalar function on R^N, stored as value at an anchor point plus a
// gradient. Anchoring at the element centroid keeps the representation well
// conditioned regardless of absolute coordinates.
template <int N>
struct AffineFn {
  using Vec = Eigen::Matrix<double, N, 1>;

  Vec anchor = Vec::Zero();
  double value = 0.0;  // value at the anchor
  Vec gradient = Vec::Zero();

  double operator()(const Vec& x) const { return value + gradient.dot(x - anchor); }

  AffineFn rebased(const Vec& new_anchor) const {
    return {new_anchor, (*this)(new_anchor), gradient};
  }

  AffineFn& operator+=(const AffineFn& other) {
    value += other(anchor);
    gradient += other.gradient;
    return *this;
  }
  AffineFn& operator-=(const AffineFn& other) {
    value -= other(anchor);
    gradient -= other.gradient;
    return *this;
  }
  AffineFn& operator*=(double s) {
    value *= s;
    gradient *= s;
    return *this;
  }
  friend AffineFn operator+(AffineFn a, const AffineFn& b) { return a += b; }
  friend AffineFn operator-(AffineFn a, const AffineFn& b) { return a -= b; }
  friend AffineFn operator*(double s, AffineFn a) { return a *= s; }
};

// A pair (v+, v-) of affine functions on an element, the universal local
// object of the piecewise-linear immersed space.
template <int N>
struct AffinePair {
  using Vec = Eigen::Matrix<double, N, 1>;

  AffineFn<N> plus;
  AffineFn<N> minus;

  const AffineFn<N>& side(int s) const { return s >= 0 ? plus : minus; }
  double eval(const Vec& x, int s) const { return side(s)(x); }

  AffinePair& operator+=(const AffinePair& o) {
    plus += o.plus;
    minus += o.minus;
    return *this;
  }
  AffinePair& operator-=(const AffinePair& o) {
    plus -= o.plus;
    minus -= o.minus;
    return *this;
  }
  AffinePair& operator*=(double s) {
    plus *= s;
    minus *= s;
    return *this;
  }
  friend AffinePair operator+(AffinePair a, const AffinePair& b) { return a += b; }
  friend AffinePair operator-(AffinePair a, const AffinePair& b) { return a -= b; }
  friend AffinePair operator*(double s, AffinePair a) { return a *= s; }

  static AffinePair continuous(const AffineFn<N>& f) { return {f, f}; }
};

}  // namespace ifem
