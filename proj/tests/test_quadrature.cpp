#include <doctest.h>

#include <cmath>
#include <random>

#include "ifem/quadrature.hpp"

using namespace ifem;

namespace {

// exact integral of x^a (1D), x^a y^b (2D), x^a y^b z^c (3D) over the unit simplex
double simplex_monomial(int a, int b = 0, int c = 0, int dim = 1) {
  auto fact = [](int n) {
    double r = 1;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
  };
  if (dim == 1) return 1.0 / (a + 1);
  if (dim == 2) return fact(a) * fact(b) / fact(a + b + 2);
  return fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
}

}  // namespace

TEST_CASE("Gauss-Legendre on [0,1] integrates polynomials of degree 2n-1") {
  for (int n = 1; n <= 8; ++n) {
    std::vector<double> p, w;
    gauss_legendre01(n, p, w);
    REQUIRE(p.size() == size_t(n));
    double ws = 0;
    for (double x : w) ws += x;
    CHECK(ws == doctest::Approx(1.0).epsilon(1e-14));
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += w[i] * std::pow(p[i], d);
      CHECK(s == doctest::Approx(1.0 / (d + 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("triangle rules are exact for monomials up to the requested degree") {
  for (int deg = 1; deg <= 8; ++deg) {
    auto rule = simplex_rule<2>(deg);
    for (int a = 0; a + 0 <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0;
        for (int q = 0; q < rule.wts.size(); ++q)
          s += rule.wts(q) * std::pow(rule.pts(0, q), a) * std::pow(rule.pts(1, q), b);
        CHECK(s == doctest::Approx(simplex_monomial(a, b, 0, 2)).epsilon(1e-12));
      }
  }
}

TEST_CASE("tetrahedron rules are exact for monomials up to the requested degree") {
  for (int deg = 1; deg <= 6; ++deg) {
    auto rule = simplex_rule<3>(deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b)
        for (int c = 0; a + b + c <= deg; ++c) {
          double s = 0;
          for (int q = 0; q < rule.wts.size(); ++q)
            s += rule.wts(q) * std::pow(rule.pts(0, q), a) * std::pow(rule.pts(1, q), b) *
                 std::pow(rule.pts(2, q), c);
          CHECK(s == doctest::Approx(simplex_monomial(a, b, c, 3)).epsilon(1e-11));
        }
  }
}

TEST_CASE("mapped rules integrate over arbitrary simplices") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int rep = 0; rep < 20; ++rep) {
    std::array<Eigen::Vector2d, 3> tri;
    for (auto& v : tri) v = Eigen::Vector2d(U(rng), U(rng));
    double area = simplex_measure<2, 2>(tri);
    if (area < 1e-3) continue;
    PhysRule<2> pr;
    map_rule<2, 2>(simplex_rule<2>(3), tri, pr);
    double ws = 0, sx = 0;
    for (size_t q = 0; q < pr.pts.size(); ++q) {
      ws += pr.wts[q];
      sx += pr.wts[q] * pr.pts[q].x();
    }
    CHECK(ws == doctest::Approx(area).epsilon(1e-12));
    double cx = (tri[0].x() + tri[1].x() + tri[2].x()) / 3;
    CHECK(sx == doctest::Approx(area * cx).epsilon(1e-12));
  }
  // degenerate simplices are skipped rather than contributing negative weight
  std::array<Eigen::Vector2d, 3> flat = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0),
                                         Eigen::Vector2d(2, 0)};
  PhysRule<2> pr;
  map_rule<2, 2>(simplex_rule<2>(2), flat, pr);
  CHECK(pr.pts.empty());
}

TEST_CASE("edge rules mapped into the plane integrate line moments") {
  std::array<Eigen::Vector2d, 2> seg = {Eigen::Vector2d(0.2, -0.4), Eigen::Vector2d(-1.0, 0.3)};
  double len = (seg[1] - seg[0]).norm();
  PhysRule<2> pr;
  map_rule<2, 1>(simplex_rule<1>(4), seg, pr);
  double ws = 0, sy = 0;
  for (size_t q = 0; q < pr.pts.size(); ++q) {
    ws += pr.wts[q];
    sy += pr.wts[q] * pr.pts[q].y();
  }
  CHECK(ws == doctest::Approx(len).epsilon(1e-13));
  CHECK(sy == doctest::Approx(len * 0.5 * (seg[0].y() + seg[1].y())).epsilon(1e-13));
}
