#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace ifem {

// Gauss-Legendre rule on [0,1]; exact for polynomials of degree 2n-1.
// Nodes found by Newton iteration on the Legendre polynomial.
inline void gauss_legendre01(int n, std::vector<double>& pts, std::vector<double>& wts) {
  pts.assign(n, 0.0);
  wts.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess on [-1,1]
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0, p1, dp;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    pts[i] = 0.5 * (1.0 - x);  // descending roots -> ascending points
    wts[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

// Quadrature rule on the unit simplex {x_i >= 0, sum x_i <= 1} in dimension K,
// exact for polynomials of total degree <= `degree`. Built by a Duffy-type
// collapsed tensor product; the map Jacobian is polynomial, so plain
// Gauss-Legendre factors with enough points stay exact.
template <int K>
struct SimplexRule {
  Eigen::Matrix<double, K, Eigen::Dynamic> pts;
  Eigen::VectorXd wts;  // sum to 1/K! (unit simplex volume)
};

template <int K>
SimplexRule<K> simplex_rule(int degree) {
  static_assert(K >= 1 && K <= 3);
  SimplexRule<K> rule;
  std::vector<double> p, w;
  if constexpr (K == 1) {
    int n = (degree + 2) / 2;
    gauss_legendre01(n, p, w);
    rule.pts.resize(1, n);
    rule.wts.resize(n);
    for (int i = 0; i < n; ++i) {
      rule.pts(0, i) = p[i];
      rule.wts(i) = w[i];
    }
  } else if constexpr (K == 2) {
    // x = u, y = v(1-u); Jacobian (1-u): degree in u rises by 1.
    int n = (degree + 3) / 2;
    gauss_legendre01(n, p, w);
    rule.pts.resize(2, n * n);
    rule.wts.resize(n * n);
    int m = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j, ++m) {
        double u = p[i], v = p[j];
        rule.pts(0, m) = u;
        rule.pts(1, m) = v * (1.0 - u);
        rule.wts(m) = w[i] * w[j] * (1.0 - u);
      }
  } else {
    // x = u, y = v(1-u), z = w(1-u)(1-v); Jacobian (1-u)^2 (1-v).
    int n = (degree + 4) / 2;
    gauss_legendre01(n, p, w);
    rule.pts.resize(3, n * n * n);
    rule.wts.resize(n * n * n);
    int m = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k, ++m) {
          double u = p[i], v = p[j], t = p[k];
          rule.pts(0, m) = u;
          rule.pts(1, m) = v * (1.0 - u);
          rule.pts(2, m) = t * (1.0 - u) * (1.0 - v);
          rule.wts(m) = w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v);
        }
  }
  return rule;
}

// Quadrature points and weights in physical coordinates (ambient dim N).
template <int N>
struct PhysRule {
  std::vector<Eigen::Matrix<double, N, 1>> pts;
  std::vector<double> wts;

  double total_weight() const {
    double s = 0;
    for (double w : wts) s += w;
    return s;
  }
};

// Measure of a K-simplex embedded in R^N given its K+1 vertices.
template <int N, int K>
double simplex_measure(const std::array<Eigen::Matrix<double, N, 1>, K + 1>& v) {
  Eigen::Matrix<double, N, K> J;
  for (int k = 0; k < K; ++k) J.col(k) = v[k + 1] - v[0];
  double fact = 1.0;
  for (int k = 2; k <= K; ++k) fact *= k;
  if constexpr (N == K) {
    return std::abs(J.determinant()) / fact;
  } else {
    return std::sqrt(std::abs((J.transpose() * J).determinant())) / fact;
  }
}

// Map a unit-simplex rule onto a K-simplex embedded in R^N, appending the
// resulting nodes/weights. Mapped weights sum to the simplex measure.
template <int N, int K>
void map_rule(const SimplexRule<K>& rule,
              const std::array<Eigen::Matrix<double, N, 1>, K + 1>& verts, PhysRule<N>& out) {
  double meas = simplex_measure<N, K>(verts);
  if (meas <= 0.0) return;
  double fact = 1.0;
  for (int k = 2; k <= K; ++k) fact *= k;
  double scale = meas * fact;  // rule weights sum to 1/K!
  for (int m = 0; m < rule.wts.size(); ++m) {
    Eigen::Matrix<double, N, 1> x = verts[0];
    for (int k = 0; k < K; ++k) x += rule.pts(k, m) * (verts[k + 1] - verts[0]);
    out.pts.push_back(x);
    out.wts.push_back(rule.wts(m) * scale);
  }
}

}  // namespace ifem
