// Command-line driver: solve single cases, run refinement studies, check
// structural properties, and export meshes/matrices.

#include <CLI11.hpp>
#include <Eigen/Sparse>
#include <fstream>
#include <iostream>
#include <unsupported/Eigen/SparseExtra>

#include "ifem/harness.hpp"

namespace {

struct CliOptions {
  ifem::RunConfig cfg;
  std::string stab = "lifting";
  std::vector<int> Ms = {16, 32, 64};
  std::vector<int> levels = {0, 1, 2};
  std::string format = "md";
  std::string out;
  bool with_cond = false;
  bool assert_rates = false;
  double l2_rate_min = 1.8, l2_rate_max = 2.2;
  double h1_rate_min = 0.8, h1_rate_max = 1.2;
};

void add_common(CLI::App* app, CliOptions& o) {
  app->add_option("--problem", o.cfg.problem, "problem name (disk, sphere, patch, zero, continuous)");
  app->add_option("--dim", o.cfg.dim, "spatial dimension (2 or 3)")->check(CLI::IsMember({2, 3}));
  app->add_option("--M", o.cfg.M, "2D subdivisions per direction");
  app->add_option("--level", o.cfg.level, "3D refinement level of the 5^3 base mesh");
  app->add_option("--beta-plus", o.cfg.beta_plus, "coefficient scale on the plus side");
  app->add_option("--beta-minus", o.cfg.beta_minus, "coefficient scale on the minus side");
  app->add_option("--stab", o.stab, "stabilization variant")
      ->check(CLI::IsMember({"lifting", "penalty"}));
  app->add_option("--eta", o.cfg.eta_scale, "penalty scale factor");
  app->add_option("--mu", o.cfg.mu, "interface patch size parameter");
  app->add_option("--tol", o.cfg.tol, "outer relative residual tolerance");
  app->add_option("--ns", o.cfg.n_s, "smoother applications per preconditioner call");
  app->add_flag("--cond", o.with_cond, "estimate the two-norm condition number");
}

void finish(CliOptions& o) {
  o.cfg.stab = (o.stab == "penalty") ? ifem::StabVariant::Penalty : ifem::StabVariant::Lifting;
  o.cfg.estimate_condition = o.with_cond;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open " + out);
    f << text;
  }
}

int cmd_solve(CliOptions& o) {
  finish(o);
  ifem::RunResult r = o.cfg.dim == 2 ? ifem::run_2d(o.cfg) : ifem::run_3d(o.cfg);
  std::cout << "dofs      " << r.dofs << "\n"
            << "near dofs " << r.n_near << "\n"
            << "h         " << r.h << "\n"
            << "iter1     " << r.iter1 << "\n"
            << "iter2     " << ifem::iter2_str(r.iter2) << "\n"
            << "residual  " << r.residual << "\n";
  if (r.l2 > 0 || r.h1 > 0)
    std::cout << "L2 error  " << r.l2 << "\n"
              << "H1 error  " << r.h1 << "\n";
  if (o.with_cond) std::cout << "cond2     " << r.cond << (r.cond_settled ? "" : " (unsettled)") << "\n";
  return 0;
}

int cmd_study(CliOptions& o) {
  finish(o);
  std::vector<ifem::StudyRow> rows = o.cfg.dim == 2
                                         ? ifem::convergence_study_2d(o.cfg, o.Ms)
                                         : ifem::convergence_study_3d(o.cfg, o.levels);
  emit(o.format == "csv" ? ifem::format_csv(rows, o.with_cond)
                         : ifem::format_markdown(rows, o.with_cond),
       o.out);
  if (o.assert_rates) {
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].rate_l2 < o.l2_rate_min || rows[i].rate_l2 > o.l2_rate_max ||
          rows[i].rate_h1 < o.h1_rate_min || rows[i].rate_h1 > o.h1_rate_max) {
        std::cerr << "rate check failed at row " << i << ": L2 rate " << rows[i].rate_l2
                  << ", H1 rate " << rows[i].rate_h1 << "\n";
        return 2;
      }
    }
  }
  return 0;
}

template <int N>
int props_for(const CliOptions& o) {
  bool ok = true;
  auto check = [&](const std::string& name, bool pass) {
    std::cout << (pass ? "PASS  " : "FAIL  ") << name << "\n";
    ok = ok && pass;
  };
  ifem::RunConfig cfg = o.cfg;
  cfg.problem = "zero";
  ifem::RunResult rz = N == 2 ? ifem::run_2d(cfg) : ifem::run_3d(cfg);
  check("zero data produces the zero solution", rz.u.lpNorm<Eigen::Infinity>() < 1e-12);
  cfg.problem = "patch";
  cfg.tol = std::min(cfg.tol, 1e-13);  // exactness check needs the algebraic error below the discretization tolerance
  ifem::RunResult rp = N == 2 ? ifem::run_2d(cfg) : ifem::run_3d(cfg);
  check("piecewise-linear solution reproduced exactly", rp.l2 < 1e-10 && rp.h1 < 1e-9);
  return ok ? 0 : 1;
}

int cmd_props(CliOptions& o) {
  finish(o);
  return o.cfg.dim == 2 ? props_for<2>(o) : props_for<3>(o);
}

template <int N>
int export_for(const CliOptions& o, const std::string& what) {
  auto prob = ifem::make_problem<N>(o.cfg.problem, o.cfg.beta_plus, o.cfg.beta_minus);
  ifem::Mesh<N> mesh;
  if constexpr (N == 2)
    mesh = ifem::build_uniform_mesh_2d(o.cfg.M);
  else
    mesh = ifem::hierarchy_3d(o.cfg.level).levels.back();
  std::string out = o.out.empty() ? (what == "mesh" ? "mesh.vtk" : "matrix.mtx") : o.out;
  if (what == "mesh") {
    auto cls = ifem::classify_elements(mesh, prob);
    std::vector<double> tags(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e)
      tags[e] = cls.elem_is_interface[e] ? 0.0 : double(cls.elem_side[e]);
    ifem::write_vtk(mesh, out, tags, "side");
  } else {
    auto d = ifem::build_discretization(mesh, prob, o.cfg.gopt, o.cfg.stab);
    auto sys = ifem::assemble(d);
    ifem::eliminate_dirichlet(sys.A, sys.rhs, sys.dirichlet, sys.is_dirichlet);
    if (!Eigen::saveMarket(sys.A, out))
      throw std::runtime_error("cannot write " + out);
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_export(CliOptions& o, const std::string& what) {
  finish(o);
  return o.cfg.dim == 2 ? export_for<2>(o, what) : export_for<3>(o, what);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonconforming immersed finite element solver"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a key=value file");
  CliOptions o;

  auto* solve = app.add_subcommand("solve", "solve a single case");
  add_common(solve, o);

  auto* study = app.add_subcommand("study", "refinement study over a mesh sequence");
  add_common(study, o);
  study->add_option("--Ms", o.Ms, "2D mesh sizes");
  study->add_option("--levels", o.levels, "3D refinement levels");
  study->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "md"}));
  study->add_option("--out", o.out, "output file (default: stdout)");
  study->add_flag("--assert", o.assert_rates, "exit 2 when rates leave the expected windows");
  study->add_option("--l2-rate-min", o.l2_rate_min);
  study->add_option("--l2-rate-max", o.l2_rate_max);
  study->add_option("--h1-rate-min", o.h1_rate_min);
  study->add_option("--h1-rate-max", o.h1_rate_max);

  auto* props = app.add_subcommand("props", "quick structural property checks");
  add_common(props, o);

  auto* exp = app.add_subcommand("export", "write mesh (VTK) or system matrix (Matrix Market)");
  add_common(exp, o);
  std::string what = "mesh";
  exp->add_option("--what", what, "mesh or matrix")->check(CLI::IsMember({"mesh", "matrix"}));
  exp->add_option("--out", o.out, "output file");

  CLI11_PARSE(app, argc, argv);
  try {
    if (solve->parsed()) return cmd_solve(o);
    if (study->parsed()) return cmd_study(o);
    if (props->parsed()) return cmd_props(o);
    if (exp->parsed()) return cmd_export(o, what);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
