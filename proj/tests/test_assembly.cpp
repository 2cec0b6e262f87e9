#include <doctest.h>

#include <Eigen/SparseCholesky>

#include "ifem/harness.hpp"

using namespace ifem;

namespace {

template <int N>
Eigen::VectorXd direct_solve(const System<N>& sys) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.A);
  REQUIRE(ldlt.info() == Eigen::Success);
  return ldlt.solve(sys.rhs);
}

template <int N>
void patch_errors(const Mesh<N>& mesh, const LevelSetProblem<N>& prob, StabVariant stab,
                  double& l2, double& h1) {
  auto d = build_discretization(mesh, prob, {}, stab);
  auto sys = assemble(d);
  eliminate_dirichlet(sys.A, sys.rhs, sys.dirichlet, sys.is_dirichlet);
  Eigen::VectorXd u = direct_solve(sys);
  compute_errors(d, u, l2, h1);
}

}  // namespace

TEST_CASE("system matrix is symmetric and positive definite") {
  auto prob = disk_problem(1000, 1);
  auto mesh = build_uniform_mesh_2d(16);
  auto d = build_discretization(mesh, prob);
  auto sys = assemble(d);
  Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(sys.A.transpose()) - sys.A;
  double scale = 0;
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, k); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  double asym = 0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
      asym = std::max(asym, std::abs(it.value()));
  CHECK(asym < 1e-10 * scale);

  eliminate_dirichlet(sys.A, sys.rhs, sys.dirichlet, sys.is_dirichlet);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(sys.A);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("zero data produces the zero solution") {
  auto prob = zero_problem<2>();
  auto mesh = build_uniform_mesh_2d(12);
  auto d = build_discretization(mesh, prob);
  auto sys = assemble(d);
  CHECK(sys.rhs.norm() < 1e-13);
  CHECK(sys.dirichlet.norm() == 0.0);
  eliminate_dirichlet(sys.A, sys.rhs, sys.dirichlet, sys.is_dirichlet);
  CHECK(direct_solve(sys).norm() < 1e-12);
}

TEST_CASE("planar patch solution is reproduced to solver precision") {
  double l2, h1;
  patch_errors(build_uniform_mesh_2d(8), patch_problem<2>(5, 1), StabVariant::Lifting, l2, h1);
  CHECK(l2 < 1e-10);
  CHECK(h1 < 1e-9);
  patch_errors(build_uniform_mesh_2d(8), patch_problem<2>(5, 1), StabVariant::Penalty, l2, h1);
  CHECK(l2 < 1e-10);
  CHECK(h1 < 1e-9);
  patch_errors(build_uniform_mesh_3d(4), patch_problem<3>(1, 8), StabVariant::Lifting, l2, h1);
  CHECK(l2 < 1e-9);
  CHECK(h1 < 1e-8);
}

TEST_CASE("continuous coefficient and zero jumps collapse to the standard scheme") {
  auto prob = continuous_problem<2>();
  auto mesh = build_uniform_mesh_2d(12);
  auto d = build_discretization(mesh, prob);
  auto sys = assemble(d);
  std::vector<char> no_bc(d.dofmap.n_dofs, 0);
  auto Astd = assemble_std_stiffness(d, no_bc);
  Eigen::SparseMatrix<double> diff = sys.A - Astd;
  double scale = 0, err = 0;
  for (int k = 0; k < Astd.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(Astd, k); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  for (int k = 0; k < diff.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
      err = std::max(err, std::abs(it.value()));
  CHECK(err < 1e-12 * scale);

  // and the two discrete solutions coincide
  System<2> std_sys = sys;
  std_sys.A = Astd;
  eliminate_dirichlet(sys.A, sys.rhs, sys.dirichlet, sys.is_dirichlet);
  Eigen::VectorXd u = direct_solve(sys);
  eliminate_dirichlet(std_sys.A, std_sys.rhs, std_sys.dirichlet, std_sys.is_dirichlet);
  Eigen::VectorXd u_std = direct_solve(std_sys);
  CHECK((u - u_std).norm() < 1e-10 * (1 + u.norm()));
}

TEST_CASE("boundary rows are eliminated to identity with the prescribed values") {
  auto prob = disk_problem(2, 1);
  auto mesh = build_uniform_mesh_2d(8);
  auto d = build_discretization(mesh, prob);
  auto sys = assemble(d);
  eliminate_dirichlet(sys.A, sys.rhs, sys.dirichlet, sys.is_dirichlet);
  for (int i = 0; i < d.dofmap.n_dofs; ++i) {
    if (!sys.is_dirichlet[i]) continue;
    CHECK(sys.rhs[i] == sys.dirichlet[i]);
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, i); it; ++it)
      CHECK(it.value() == (it.row() == i ? 1.0 : 0.0));
    // boundary value: face average of the boundary data
    int f = d.dofmap.dof_face[i];
    auto fv = mesh.face_vertices(f);
    std::vector<double> gp, gw;
    gauss_legendre01(8, gp, gw);
    double avg = 0;
    for (size_t q = 0; q < gp.size(); ++q)
      avg += gw[q] * prob.g_boundary(fv[0] + gp[q] * (fv[1] - fv[0]));
    CHECK(sys.dirichlet[i] == doctest::Approx(avg).epsilon(1e-7));
  }
}

TEST_CASE("interface dofs come first and the near block is contiguous") {
  auto prob = disk_problem(2, 1);
  auto mesh = build_uniform_mesh_2d(16);
  auto d = build_discretization(mesh, prob);
  CHECK(d.dofmap.n_near > 0);
  CHECK(d.dofmap.n_near < d.dofmap.n_dofs);
  // near faces map to dofs below n_near, all others above
  for (int f = 0; f < mesh.num_faces(); ++f) {
    int dof = d.dofmap.face_dof[f];
    if (d.cls.face_near[f])
      CHECK(dof < d.dofmap.n_near);
    else
      CHECK(dof >= d.dofmap.n_near);
  }
  // every face of an interface element is near, so its dofs land in the block
  for (int e : d.cls.interface_elements)
    for (int i = 0; i <= 2; ++i)
      CHECK(d.dofmap.face_dof[mesh.element_faces[e][i]] < d.dofmap.n_near);
}

TEST_CASE("stabilization variants agree on the patch and stay close on the disk") {
  RunConfig cfg;
  cfg.problem = "disk";
  cfg.beta_plus = 2;
  cfg.beta_minus = 1;
  cfg.M = 32;
  cfg.stab = StabVariant::Lifting;
  auto lift = run_2d(cfg);
  cfg.stab = StabVariant::Penalty;
  auto pen = run_2d(cfg);
  CHECK(std::abs(lift.l2 - pen.l2) < 0.2 * std::max(lift.l2, pen.l2));
  CHECK(std::abs(lift.h1 - pen.h1) < 0.2 * std::max(lift.h1, pen.h1));
}
