#include <doctest.h>

#include <cmath>
#include <random>

#include "ifem/geometry.hpp"
#include "ifem/problems.hpp"

using namespace ifem;

namespace {

LevelSetProblem<2> circle_problem(double r = 0.5) {
  LevelSetProblem<2> p = zero_problem<2>();
  p.phi = [r](const Eigen::Vector2d& x) { return x.squaredNorm() - r * r; };
  p.grad_phi = [](const Eigen::Vector2d& x) -> Eigen::Vector2d { return 2 * x; };
  return p;
}

LevelSetProblem<3> ball_problem(double r) {
  LevelSetProblem<3> p = zero_problem<3>();
  p.phi = [r](const Eigen::Vector3d& x) { return x.squaredNorm() - r * r; };
  p.grad_phi = [](const Eigen::Vector3d& x) -> Eigen::Vector3d { return 2 * x; };
  return p;
}

}  // namespace

TEST_CASE("plane split of a simplex: measures and Monte Carlo cross-check") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int rep = 0; rep < 40; ++rep) {
    std::array<Eigen::Vector2d, 3> tri;
    for (auto& v : tri) v = Eigen::Vector2d(U(rng), U(rng));
    double area = simplex_measure<2, 2>(tri);
    if (area < 1e-2) continue;
    Eigen::Vector2d x0(0.3 * U(rng), 0.3 * U(rng));
    Eigen::Vector2d n = Eigen::Vector2d(U(rng), U(rng)).normalized();
    auto split = split_by_plane<2, 2>(tri, x0, n, 1.0);
    double ap = 0, am = 0;
    for (const auto& s : split.plus) ap += simplex_measure<2, 2>(s);
    for (const auto& s : split.minus) am += simplex_measure<2, 2>(s);
    CHECK(ap + am == doctest::Approx(area).epsilon(1e-12));
    // Monte Carlo oracle for the plus fraction
    int hits = 0, total = 40000;
    std::uniform_real_distribution<double> B(0, 1);
    for (int k = 0; k < total; ++k) {
      double a = B(rng), b = B(rng);
      if (a + b > 1) {
        a = 1 - a;
        b = 1 - b;
      }
      Eigen::Vector2d x = tri[0] + a * (tri[1] - tri[0]) + b * (tri[2] - tri[0]);
      if ((x - x0).dot(n) >= 0) ++hits;
    }
    double mc = area * hits / double(total);
    CHECK(std::abs(ap - mc) < 6 * area / std::sqrt(double(total)));
  }
}

TEST_CASE("plane split of a tetrahedron conserves volume for all cut patterns") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int rep = 0; rep < 60; ++rep) {
    std::array<Eigen::Vector3d, 4> tet;
    for (auto& v : tet) v = Eigen::Vector3d(U(rng), U(rng), U(rng));
    double vol = simplex_measure<3, 3>(tet);
    if (vol < 1e-3) continue;
    Eigen::Vector3d x0(0.2 * U(rng), 0.2 * U(rng), 0.2 * U(rng));
    Eigen::Vector3d n = Eigen::Vector3d(U(rng), U(rng), U(rng)).normalized();
    auto split = split_by_plane<3, 3>(tet, x0, n, 1.0);
    double vp = 0, vm = 0;
    for (const auto& s : split.plus) vp += simplex_measure<3, 3>(s);
    for (const auto& s : split.minus) vm += simplex_measure<3, 3>(s);
    CHECK(vp + vm == doctest::Approx(vol).epsilon(1e-11));
    // facets tile the cut polygon: their area equals the polygon area measured
    // by projecting boundary crossings; cheap sanity: all facet normals align
    for (const auto& fct : split.facets) {
      Eigen::Vector3d fn = (fct[1] - fct[0]).cross(fct[2] - fct[0]);
      if (fn.norm() > 1e-14) CHECK(std::abs(fn.normalized().dot(n)) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("level-set split recovers circle area and arc length") {
  auto prob = circle_problem(0.5);
  auto mesh = build_uniform_mesh_2d(64);
  double inside = 0, arc = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    auto verts = mesh.element_vertices(e);
    auto split = split_by_levelset<2, 2>(verts, prob);
    for (const auto& s : split.minus) inside += simplex_measure<2, 2>(s);
    for (const auto& f : split.facets) arc += (f[1] - f[0]).norm();
  }
  CHECK(inside == doctest::Approx(M_PI * 0.25).epsilon(2e-4));
  CHECK(arc == doctest::Approx(M_PI).epsilon(2e-4));
}

TEST_CASE("level-set split recovers sphere volume and surface at second order") {
  double r = 0.6;
  auto prob = ball_problem(r);
  double vol_exact = 4.0 / 3.0 * M_PI * r * r * r, surf_exact = 4 * M_PI * r * r;
  double vol_err[2], surf_err[2];
  int Ms[2] = {8, 16};
  for (int m = 0; m < 2; ++m) {
    auto mesh = build_uniform_mesh_3d(Ms[m]);
    double inside = 0, surf = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      auto verts = mesh.element_vertices(e);
      auto split = split_by_levelset<3, 3>(verts, prob);
      for (const auto& s : split.minus) inside += simplex_measure<3, 3>(s);
      for (const auto& f : split.facets) surf += 0.5 * (f[1] - f[0]).cross(f[2] - f[0]).norm();
    }
    vol_err[m] = std::abs(inside - vol_exact);
    surf_err[m] = std::abs(surf - surf_exact);
  }
  // chordal facets: both quantities converge at second order in the mesh size
  CHECK(vol_err[1] < 0.02 * vol_exact);
  CHECK(surf_err[1] < 0.02 * surf_exact);
  CHECK(vol_err[1] < 0.35 * vol_err[0]);
  CHECK(surf_err[1] < 0.35 * surf_err[0]);
}

TEST_CASE("classification separates cut, near, and far elements") {
  auto prob = circle_problem(0.5);
  auto mesh = build_uniform_mesh_2d(16);
  auto cls = classify_elements(mesh, prob);
  int ncut = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    bool sign_change = false;
    auto verts = mesh.element_vertices(e);
    int s0 = prob.phi(verts[0]) >= 0 ? 1 : -1;
    for (int i = 1; i < 3; ++i)
      if ((prob.phi(verts[i]) >= 0 ? 1 : -1) != s0) sign_change = true;
    if (cls.elem_is_interface[e]) {
      ++ncut;
      CHECK(cls.elem_near[e]);
    } else {
      // uncut elements carry the sign of their centroid
      int side = prob.phi(mesh.element_centroid(e)) >= 0 ? 1 : -1;
      if (!sign_change) CHECK(cls.elem_side[e] == side);
    }
  }
  CHECK(ncut > 0);
  CHECK(size_t(ncut) == cls.interface_elements.size());
  // every neighbor of a cut element across a face is near
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& F = mesh.faces[f];
    if (F.boundary) continue;
    if (cls.elem_is_interface[F.elem[0]] || cls.elem_is_interface[F.elem[1]]) {
      CHECK(cls.elem_near[F.elem[0]]);
      CHECK(cls.elem_near[F.elem[1]]);
    }
  }
}

TEST_CASE("interface frame satisfies the plane and anchor requirements") {
  auto prob = circle_problem(0.5);
  for (int M : {16, 32}) {
    auto mesh = build_uniform_mesh_2d(M);
    auto cls = classify_elements(mesh, prob);
    for (int e : cls.interface_elements) {
      auto fr = build_interface_frame(mesh, e, prob, cls);
      CHECK(fr.n_bar.norm() == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(std::abs(fr.t_bar[0].dot(fr.n_bar)) < 1e-13);
      CHECK(fr.d_L(fr.x0_bar) == doctest::Approx(0.0).epsilon(1e-12));
      // anchor images lie on the interface, close to the anchors
      for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(prob.phi(fr.x_tilde_pts[i])) < 1e-9);
        CHECK((fr.x_tilde_pts[i] - fr.x_bar_pts[i]).norm() < 10 * fr.h_T * fr.h_T);
      }
      // the plane separates the vertices exactly as the level set does
      for (int i = 0; i <= 2; ++i) {
        int vid = mesh.elements[e][i];
        double phi_v = prob.phi(mesh.vertices[vid]);
        double d_v = fr.d_L(mesh.vertices[vid]);
        if (phi_v >= 0)
          CHECK(d_v >= -1e-11 * fr.h_T);
        else
          CHECK(d_v < 1e-11 * fr.h_T);
      }
      // the normal points toward the plus side
      CHECK(fr.n_bar.dot(prob.grad_phi(fr.x_tilde_pts[0])) > 0);
    }
  }
}

TEST_CASE("cut element data: volumes, face moments, interface patch average") {
  auto prob = circle_problem(0.5);
  auto mesh = build_uniform_mesh_2d(24);
  auto cls = classify_elements(mesh, prob);
  GeometryOptions opts;
  for (int e : cls.interface_elements) {
    auto data = build_cut_data(mesh, e, prob, cls, opts);
    CHECK(data.vol_plus + data.vol_minus ==
          doctest::Approx(mesh.element_volume(e)).epsilon(1e-12));
    for (int i = 0; i <= 2; ++i) {
      int f = mesh.element_faces[e][i];
      const auto& fm = data.face_moments[i];
      CHECK(fm.meas_plus + fm.meas_minus ==
            doctest::Approx(mesh.face_measure(f)).epsilon(1e-12));
      Eigen::Vector2d mom = fm.mom_plus + fm.mom_minus;
      Eigen::Vector2d exact = mesh.face_measure(f) * mesh.face_centroid(f);
      CHECK((mom - exact).norm() < 1e-12);
    }
    // the external interface patch is at least as long as its parameter range
    CHECK(data.gamma_ext_measure >= 0.99 * data.frame.mu * data.h_T);
    auto one = [](const Eigen::Vector2d&) { return 3.25; };
    CHECK(data.avg_gamma_ext(one) == doctest::Approx(3.25).epsilon(1e-12));
  }
}

TEST_CASE("volume quadrature on cut elements is exact for linears per side") {
  auto prob = circle_problem(0.5);
  auto mesh = build_uniform_mesh_2d(16);
  auto cls = classify_elements(mesh, prob);
  for (int e : cls.interface_elements) {
    PhysRule<2> qp, qm, qi;
    cut_quadrature(mesh, e, prob, 2, 2, qp, qm, qi);
    double tot = qp.total_weight() + qm.total_weight();
    CHECK(tot == doctest::Approx(mesh.element_volume(e)).epsilon(1e-10));
    // the split is exact on the edges but uses the chord inside, so points in
    // the curvature slivers may sit O(h^2) past the exact interface
    double h = mesh.element_diameter(e);
    for (size_t k = 0; k < qp.pts.size(); ++k) CHECK(prob.phi(qp.pts[k]) >= -0.5 * h * h);
    for (size_t k = 0; k < qm.pts.size(); ++k) CHECK(prob.phi(qm.pts[k]) <= 0.5 * h * h);
  }
}
