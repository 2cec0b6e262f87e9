#include <doctest.h>

#include <cmath>
#include <random>

#include "ifem/problems.hpp"

using namespace ifem;

namespace {

// -div(B grad u) by central differences of the exact flux
template <int N>
double fd_source(const LevelSetProblem<N>& p, int side, const Eigen::Matrix<double, N, 1>& x,
                 double h = 1e-5) {
  using Vec = Eigen::Matrix<double, N, 1>;
  auto flux = [&](const Vec& y, int i) {
    return (p.B(side, y) * p.grad_u(side, y))(i);
  };
  double div = 0;
  for (int i = 0; i < N; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    div += (flux(xp, i) - flux(xm, i)) / (2 * h);
  }
  return -div;
}

template <int N>
Eigen::Matrix<double, N, 1> fd_grad(const LevelSetProblem<N>& p, int side,
                                    const Eigen::Matrix<double, N, 1>& x, double h = 1e-6) {
  Eigen::Matrix<double, N, 1> g;
  for (int i = 0; i < N; ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (p.exact_u(side, xp) - p.exact_u(side, xm)) / (2 * h);
  }
  return g;
}

template <int N>
void check_consistency(const LevelSetProblem<N>& p, std::mt19937& rng) {
  using Vec = Eigen::Matrix<double, N, 1>;
  std::uniform_real_distribution<double> U(-0.95, 0.95);
  std::normal_distribution<double> G;
  int done = 0;
  while (done < 40) {
    Vec x;
    for (int i = 0; i < N; ++i) x[i] = U(rng);
    double phi = p.phi(x);
    if (std::abs(phi) < 0.02) continue;  // stay clearly on one side
    int side = phi >= 0 ? 1 : -1;
    ++done;
    // gradient matches the solution, source matches the flux divergence
    CHECK((p.grad_u(side, x) - fd_grad(p, side, x)).norm() < 2e-8 * (1 + p.grad_u(side, x).norm()));
    double f = side >= 0 ? p.f_plus(x) : p.f_minus(x);
    double scale = std::abs(p.B(side, x).norm() * (1 + p.grad_u(side, x).norm()));
    CHECK(std::abs(f - fd_source(p, side, x)) < 1e-6 * (1 + scale));
    // boundary data agrees with the side-exact solution everywhere
    CHECK(p.g_boundary(x) == doctest::Approx(p.exact_u(side, x)).epsilon(1e-12));
    // level-set gradient by differences
    Vec gphi;
    for (int i = 0; i < N; ++i) {
      Vec xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      gphi[i] = (p.phi(xp) - p.phi(xm)) / 2e-6;
    }
    CHECK((p.grad_phi(x) - gphi).norm() < 1e-8 * (1 + gphi.norm()));
  }
  // jump data on the interface: random directions projected to phi = 0
  for (int k = 0; k < 40; ++k) {
    Vec dir;
    for (int i = 0; i < N; ++i) dir[i] = G(rng);
    dir.normalize();
    // bisect phi(t*dir) = 0 on t in (0, 1)
    double lo = 1e-3, hi = 1.0;
    if (p.phi(lo * dir) >= 0 || p.phi(hi * dir) <= 0) continue;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      (p.phi(mid * dir) < 0 ? lo : hi) = mid;
    }
    Vec x = 0.5 * (lo + hi) * dir;
    Vec n = p.grad_phi(x).normalized();
    double jump_u = p.exact_u(1, x) - p.exact_u(-1, x);
    double jump_flux = n.dot(p.B(1, x) * p.grad_u(1, x)) - n.dot(p.B(-1, x) * p.grad_u(-1, x));
    CHECK(std::abs(p.g_D(x) - jump_u) < 1e-9 * (1 + std::abs(jump_u)));
    CHECK(std::abs(p.g_N(x) - jump_flux) < 1e-9 * (1 + std::abs(jump_flux)));
  }
}

}  // namespace

TEST_CASE("2D problems are internally consistent") {
  std::mt19937 rng(3);
  check_consistency(disk_problem(1000, 1), rng);
  check_consistency(disk_problem(1, 1000), rng);
  check_consistency(patch_problem<2>(5, 1), rng);
  check_consistency(continuous_problem<2>(), rng);
}

TEST_CASE("3D problems are internally consistent") {
  std::mt19937 rng(4);
  check_consistency(sphere_problem(10, 1), rng);
  check_consistency(patch_problem<3>(1, 8), rng);
}

TEST_CASE("coefficients are symmetric positive definite where evaluated") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  auto p = disk_problem(1, 1);
  for (int k = 0; k < 200; ++k) {
    Eigen::Vector2d x(U(rng), U(rng));
    for (int side : {1, -1}) {
      Eigen::Matrix2d B = p.B(side, x);
      CHECK((B - B.transpose()).norm() < 1e-14);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(B);
      CHECK(es.eigenvalues().minCoeff() > 0);
    }
  }
}

TEST_CASE("problem factory dispatches names and rejects unknown ones") {
  CHECK(make_problem<2>("disk", 2, 1).has_exact);
  CHECK(make_problem<2>("patch", 1, 1).has_exact);
  CHECK(make_problem<2>("zero", 1, 1).has_exact);
  CHECK(make_problem<2>("continuous", 1, 1).has_exact);
  CHECK(make_problem<3>("sphere", 1, 1).has_exact);
  CHECK_THROWS_AS(make_problem<2>("sphere", 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_problem<3>("disk", 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_problem<2>("nope", 1, 1), std::invalid_argument);
}
