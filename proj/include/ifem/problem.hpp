#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "ifem/errors.hpp"

namespace ifem {

// Interface problem data bundle: level set, coefficients, sources, jump data
// and (optionally) the exact solution for error measurement. The sign
// convention is phi < 0 on the minus domain, so grad(phi)/|grad(phi)| points
// toward the plus side, matching the interface normal.
template <int N>
struct LevelSetProblem {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  using ScalarField = std::function<double(const Vec&)>;
  using VectorField = std::function<Vec(const Vec&)>;
  using MatrixField = std::function<Mat(const Vec&)>;

  ScalarField phi;
  VectorField grad_phi;
  MatrixField B_plus, B_minus;
  ScalarField f_plus, f_minus;
  ScalarField g_D, g_N, g_boundary;
  double beta0_plus = 1.0, beta0_minus = 1.0;

  bool has_exact = false;
  ScalarField exact_u_plus, exact_u_minus;
  VectorField grad_u_plus, grad_u_minus;

  int side_of(const Vec& x) const { return phi(x) >= 0 ? +1 : -1; }

  Mat B(int side, const Vec& x) const { return side >= 0 ? B_plus(x) : B_minus(x); }
  Mat B_at(const Vec& x) const { return B(side_of(x), x); }
  double f(int side, const Vec& x) const { return side >= 0 ? f_plus(x) : f_minus(x); }
  double f_at(const Vec& x) const { return f(side_of(x), x); }
  double exact_u(int side, const Vec& x) const {
    return side >= 0 ? exact_u_plus(x) : exact_u_minus(x);
  }
  Vec grad_u(int side, const Vec& x) const {
    return side >= 0 ? grad_u_plus(x) : grad_u_minus(x);
  }
  Vec interface_normal(const Vec& x) const { return grad_phi(x).normalized(); }
};

}  // namespace ifem
