#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ifem/problem.hpp"

namespace ifem {

// -f = div(B grad u) expanded with the product rule:
//   f = -sum_i (d_i B row i) . grad u - B : Hess u.
template <int N>
double source_from(const Eigen::Matrix<double, N, N>& B,
                   const std::array<Eigen::Matrix<double, N, N>, N>& dB,
                   const Eigen::Matrix<double, N, 1>& grad,
                   const Eigen::Matrix<double, N, N>& hess) {
  double f = -(B.cwiseProduct(hess)).sum();
  for (int i = 0; i < N; ++i) f -= dB[i].row(i).dot(grad);
  return f;
}

// Circular interface in the square (-1,1)^2 with a variable anisotropic
// coefficient on both sides and nonhomogeneous value/flux jumps.
//   u+ = ln(x^2+y^2) outside the circle r = 1/2, u- = sin(x+y) inside.
inline LevelSetProblem<2> disk_problem(double beta_plus, double beta_minus) {
  using Vec = Eigen::Vector2d;
  using Mat = Eigen::Matrix2d;
  LevelSetProblem<2> p;
  p.beta0_plus = beta_plus;
  p.beta0_minus = beta_minus;
  p.phi = [](const Vec& x) { return x.squaredNorm() - 0.25; };
  p.grad_phi = [](const Vec& x) -> Vec { return 2.0 * x; };

  auto Bp = [beta_plus](const Vec& x) -> Mat {
    double s = std::sin(x.x() + x.y()), c = std::cos(x.x() + x.y());
    Mat B;
    B << s + 5, c + 2, c + 2, s + 10;
    return beta_plus * B;
  };
  auto Bm = [beta_minus](const Vec& x) -> Mat {
    double X = x.x(), Y = x.y();
    Mat B;
    B << X * X + 10, X * Y + 2, X * Y + 2, X * X * Y * Y + 5;
    return beta_minus * B;
  };
  p.B_plus = Bp;
  p.B_minus = Bm;

  auto up = [](const Vec& x) { return std::log(x.squaredNorm()); };
  auto gup = [](const Vec& x) -> Vec { return 2.0 * x / x.squaredNorm(); };
  auto hup = [](const Vec& x) -> Mat {
    double r2 = x.squaredNorm();
    Mat H = (2.0 / r2) * Mat::Identity();
    H -= (4.0 / (r2 * r2)) * x * x.transpose();
    return H;
  };
  auto um = [](const Vec& x) { return std::sin(x.x() + x.y()); };
  auto gum = [](const Vec& x) -> Vec {
    double c = std::cos(x.x() + x.y());
    return Vec(c, c);
  };
  auto hum = [](const Vec& x) -> Mat {
    return -std::sin(x.x() + x.y()) * Mat::Ones();
  };

  p.f_plus = [=](const Vec& x) {
    double s = std::sin(x.x() + x.y()), c = std::cos(x.x() + x.y());
    Mat dB;
    dB << c, -s, -s, c;
    std::array<Mat, 2> dBp = {beta_plus * dB, beta_plus * dB};
    return source_from<2>(Bp(x), dBp, gup(x), hup(x));
  };
  p.f_minus = [=](const Vec& x) {
    double X = x.x(), Y = x.y();
    Mat dBx, dBy;
    dBx << 2 * X, Y, Y, 2 * X * Y * Y;
    dBy << 0, X, X, 2 * X * X * Y;
    std::array<Mat, 2> dBm = {beta_minus * dBx, beta_minus * dBy};
    return source_from<2>(Bm(x), dBm, gum(x), hum(x));
  };

  p.g_D = [=](const Vec& x) { return up(x) - um(x); };
  p.g_N = [=](const Vec& x) {
    Vec n = x.normalized();
    return n.dot(Bp(x) * gup(x)) - n.dot(Bm(x) * gum(x));
  };
  p.g_boundary = [=, phi = p.phi](const Vec& x) { return phi(x) >= 0 ? up(x) : um(x); };
  p.has_exact = true;
  p.exact_u_plus = up;
  p.exact_u_minus = um;
  p.grad_u_plus = gup;
  p.grad_u_minus = gum;
  return p;
}

// Spherical interface in the cube (-1,1)^3, constant anisotropic coefficients.
//   u+ = |x|^2 outside the sphere r = 1/2, u- = sin(x+y+z) inside.
inline LevelSetProblem<3> sphere_problem(double beta_plus, double beta_minus) {
  using Vec = Eigen::Vector3d;
  using Mat = Eigen::Matrix3d;
  LevelSetProblem<3> p;
  p.beta0_plus = beta_plus;
  p.beta0_minus = beta_minus;
  p.phi = [](const Vec& x) { return x.squaredNorm() - 0.25; };
  p.grad_phi = [](const Vec& x) -> Vec { return 2.0 * x; };

  Mat Mp, Mm;
  Mp << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  Mm << 3, 0.5, 0, 0.5, 4, 1, 0, 1, 5;
  Mat Bp = beta_plus * Mp, Bm = beta_minus * Mm;
  p.B_plus = [Bp](const Vec&) { return Bp; };
  p.B_minus = [Bm](const Vec&) { return Bm; };

  auto up = [](const Vec& x) { return x.squaredNorm(); };
  auto gup = [](const Vec& x) -> Vec { return 2.0 * x; };
  auto um = [](const Vec& x) { return std::sin(x.sum()); };
  auto gum = [](const Vec& x) -> Vec { return std::cos(x.sum()) * Vec::Ones(); };

  p.f_plus = [Bp](const Vec&) { return -2.0 * Bp.trace(); };
  p.f_minus = [Bm](const Vec& x) { return std::sin(x.sum()) * Bm.sum(); };
  p.g_D = [=](const Vec& x) { return up(x) - um(x); };
  p.g_N = [=](const Vec& x) {
    Vec n = x.normalized();
    return n.dot(Bp * gup(x)) - n.dot(Bm * gum(x));
  };
  p.g_boundary = [=, phi = p.phi](const Vec& x) { return phi(x) >= 0 ? up(x) : um(x); };
  p.has_exact = true;
  p.exact_u_plus = up;
  p.exact_u_minus = um;
  p.grad_u_plus = gup;
  p.grad_u_minus = gum;
  return p;
}

// Planar interface with a piecewise-linear exact solution: constant value
// jump, constant flux jump, zero source. A correct implementation reproduces
// it exactly on any mesh that resolves the plane.
template <int N>
LevelSetProblem<N> patch_problem(double beta_plus, double beta_minus) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  Vec n, a;
  Mat Mp, Mm;
  double d, gamma, delta;
  if constexpr (N == 2) {
    n = Vec(2.0, 1.0).normalized();
    a = Vec(1.0, 0.5);
    Mp << 3, 1, 1, 2;
    Mm << 2, 0.5, 0.5, 1.5;
    d = 0.111;
    gamma = 0.8;
    delta = 0.6;
  } else {
    n = Vec(1.0, 0.6, -0.3).normalized();
    a = Vec(0.7, -0.4, 0.2);
    Mp << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    Mm << 3, 0.5, 0, 0.5, 4, 1, 0, 1, 5;
    d = 0.077;
    gamma = 0.9;
    delta = 0.35;
  }
  Mat Bp = beta_plus * Mp, Bm = beta_minus * Mm;
  const double c0 = 0.25;

  LevelSetProblem<N> p;
  p.beta0_plus = beta_plus;
  p.beta0_minus = beta_minus;
  p.phi = [n, d](const Vec& x) { return n.dot(x) - d; };
  p.grad_phi = [n](const Vec&) { return n; };
  p.B_plus = [Bp](const Vec&) { return Bp; };
  p.B_minus = [Bm](const Vec&) { return Bm; };

  auto um = [a, c0](const Vec& x) { return a.dot(x) + c0; };
  auto up = [=](const Vec& x) { return a.dot(x) + c0 + gamma * (n.dot(x) - d) + delta; };
  Vec gp = a + gamma * n;
  p.f_plus = [](const Vec&) { return 0.0; };
  p.f_minus = [](const Vec&) { return 0.0; };
  p.g_D = [delta](const Vec&) { return delta; };
  double gn = n.dot(Bp * gp) - n.dot(Bm * a);
  p.g_N = [gn](const Vec&) { return gn; };
  p.g_boundary = [=, phi = p.phi](const Vec& x) { return phi(x) >= 0 ? up(x) : um(x); };
  p.has_exact = true;
  p.exact_u_plus = up;
  p.exact_u_minus = um;
  p.grad_u_plus = [gp](const Vec&) { return gp; };
  p.grad_u_minus = [a](const Vec&) { return a; };
  return p;
}

// Homogeneous problem (u = 0): every assembled quantity must vanish.
template <int N>
LevelSetProblem<N> zero_problem() {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  LevelSetProblem<N> p;
  p.phi = [](const Vec& x) { return x.squaredNorm() - 0.25; };
  p.grad_phi = [](const Vec& x) -> Vec { return 2.0 * x; };
  p.B_plus = [](const Vec&) { return Mat::Identity(); };
  p.B_minus = [](const Vec&) { return Mat::Identity(); };
  auto zero = [](const Vec&) { return 0.0; };
  p.f_plus = p.f_minus = p.g_D = p.g_N = p.g_boundary = zero;
  p.has_exact = true;
  p.exact_u_plus = p.exact_u_minus = zero;
  p.grad_u_plus = p.grad_u_minus = [](const Vec&) { return Vec::Zero(); };
  return p;
}

// Smooth solution without jumps across a circular interface; exercises the
// cut machinery in a setting where it must stay consistent.
template <int N>
LevelSetProblem<N> continuous_problem() {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  LevelSetProblem<N> p;
  p.phi = [](const Vec& x) { return x.squaredNorm() - 0.25; };
  p.grad_phi = [](const Vec& x) -> Vec { return 2.0 * x; };
  p.B_plus = [](const Vec&) { return Mat::Identity(); };
  p.B_minus = [](const Vec&) { return Mat::Identity(); };
  auto u = [](const Vec& x) { return std::sin(x.sum()); };
  auto gu = [](const Vec& x) -> Vec { return std::cos(x.sum()) * Vec::Ones(); };
  auto f = [](const Vec& x) { return double(N) * std::sin(x.sum()); };
  p.f_plus = p.f_minus = f;
  p.g_D = p.g_N = [](const Vec&) { return 0.0; };
  p.g_boundary = u;
  p.has_exact = true;
  p.exact_u_plus = p.exact_u_minus = u;
  p.grad_u_plus = p.grad_u_minus = gu;
  return p;
}

template <int N>
LevelSetProblem<N> make_problem(const std::string& name, double beta_plus, double beta_minus) {
  if (name == "patch") return patch_problem<N>(beta_plus, beta_minus);
  if (name == "zero") return zero_problem<N>();
  if (name == "continuous") return continuous_problem<N>();
  if constexpr (N == 2) {
    if (name == "disk") return disk_problem(beta_plus, beta_minus);
  } else {
    if (name == "sphere") return sphere_problem(beta_plus, beta_minus);
  }
  throw std::invalid_argument("unknown problem: " + name);
}

}  // namespace ifem
