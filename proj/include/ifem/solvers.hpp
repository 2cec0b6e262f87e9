#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "ifem/assembly.hpp"
#include "ifem/errors.hpp"
#include "ifem/mesh.hpp"

namespace ifem {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatRM = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Interface-corrected smoother: one forward Gauss-Seidel sweep followed by an
// exact solve on the leading near-interface block,
//   R = R_gs + P (I - A R_gs),   P = E (A_Gamma)^{-1} E',
// where E injects the leading m dofs. apply() realizes v + R(g - A v); the
// transpose uses R' = P + (D+U)^{-1} (I - A P).
// ---------------------------------------------------------------------------
class SmootherR {
 public:
  SmootherR(const SpMat& A, int m_near) : A_(A), m_(m_near) {
    SpMat block = extract_interface_block(A, m_);
    llt_.compute(block);
    if (llt_.info() != Eigen::Success)
      throw FactorizationFailure("near-interface block is not positive definite");
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& g, Eigen::VectorXd v) const {
    forward_sweep(g, v);
    Eigen::VectorXd r = g - A_ * v;
    v.head(m_) += llt_.solve(r.head(m_));
    return v;
  }

  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& g, const Eigen::VectorXd& v) const {
    Eigen::VectorXd r = g - A_ * v;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(r.size());
    w.head(m_) = llt_.solve(r.head(m_));
    Eigen::VectorXd r2 = r - A_ * w;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(r.size());
    backward_solve(r2, z);
    return v + w + z;
  }

  int near_size() const { return m_; }

 private:
  void forward_sweep(const Eigen::VectorXd& g, Eigen::VectorXd& v) const {
    const int n = static_cast<int>(A_.rows());
    for (int i = 0; i < n; ++i) {
      double s = g[i], diag = 0;
      for (SpMatRM::InnerIterator it(A_, i); it; ++it) {
        if (it.col() == i)
          diag = it.value();
        else
          s -= it.value() * v[it.col()];
      }
      v[i] = s / diag;
    }
  }
  // (D+U) z = r
  void backward_solve(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
    const int n = static_cast<int>(A_.rows());
    for (int i = n - 1; i >= 0; --i) {
      double s = r[i], diag = 0;
      for (SpMatRM::InnerIterator it(A_, i); it; ++it) {
        if (it.col() == i)
          diag = it.value();
        else if (it.col() > i)
          s -= it.value() * z[it.col()];
      }
      z[i] = s / diag;
    }
  }

  SpMatRM A_;
  int m_;
  Eigen::SimplicialLLT<SpMat> llt_;
};

// ---------------------------------------------------------------------------
// Prolongation between nested nonconforming spaces: a coarse function is
// evaluated at each fine face midpoint through the parent element(s); when
// the midpoint is shared by two fine elements the two parent traces are
// averaged. Boundary rows/columns are dropped (corrections vanish there).
// ---------------------------------------------------------------------------
template <int N>
SpMat cr_prolongation(const Mesh<N>& coarse, const Mesh<N>& fine,
                      const std::vector<int>& fine_row, const std::vector<int>& coarse_col,
                      const std::vector<char>& fine_row_bdry,
                      const std::vector<char>& coarse_col_bdry, int n_fine, int n_coarse) {
  std::vector<std::vector<int>> face_elems(fine.num_faces());
  for (int e = 0; e < fine.num_elements(); ++e)
    for (int i = 0; i <= N; ++i) face_elems[fine.element_faces[e][i]].push_back(e);

  std::vector<Eigen::Triplet<double>> trips;
  for (int f = 0; f < fine.num_faces(); ++f) {
    int row = fine_row[f];
    if (fine_row_bdry[row]) continue;
    auto mid = fine.face_centroid(f);
    const auto& adj = face_elems[f];
    double w = 1.0 / adj.size();
    for (int e : adj) {
      int pe = fine.parent_elements[e];
      auto lam = cr_basis(coarse, pe);
      for (int i = 0; i <= N; ++i) {
        int col = coarse_col[coarse.element_faces[pe][i]];
        if (coarse_col_bdry[col]) continue;
        double v = lam[i](mid);
        if (std::abs(v) > 1e-14) trips.emplace_back(row, col, w * v);
      }
    }
  }
  SpMat P(n_fine, n_coarse);
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

// Galerkin V-cycle on the standard stiffness, symmetric Gauss-Seidel
// smoothing (forward pre, backward post), direct solve on the coarsest level.
class Multigrid {
 public:
  std::vector<SpMatRM> A;  // A[0] finest ... A.back() coarsest
  std::vector<SpMat> P;    // P[l] : level l+1 -> level l
  int nu = 5;

  void finalize() {
    coarse_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(SpMat(A.back()));
    if (coarse_->info() != Eigen::Success)
      throw FactorizationFailure("coarse-level factorization failed");
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& b) const { return vcycle(0, b); }

 private:
  Eigen::VectorXd vcycle(size_t l, const Eigen::VectorXd& b) const {
    if (l == A.size() - 1) return coarse_->solve(b);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(b.size());
    for (int s = 0; s < nu; ++s) gs_sweep(A[l], b, v, true);
    Eigen::VectorXd rc = P[l].transpose() * (b - A[l] * v);
    v += P[l] * vcycle(l + 1, rc);
    for (int s = 0; s < nu; ++s) gs_sweep(A[l], b, v, false);
    return v;
  }
  static void gs_sweep(const SpMatRM& A, const Eigen::VectorXd& b, Eigen::VectorXd& v,
                       bool forward) {
    const int n = static_cast<int>(A.rows());
    for (int k = 0; k < n; ++k) {
      int i = forward ? k : n - 1 - k;
      double s = b[i], diag = 0;
      for (SpMatRM::InnerIterator it(A, i); it; ++it) {
        if (it.col() == i)
          diag = it.value();
        else
          s -= it.value() * v[it.col()];
      }
      v[i] = s / diag;
    }
  }
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> coarse_;
};

struct PcgReport {
  int iterations = 0;
  double residual = 0;
  bool converged = false;
};

// Preconditioned conjugate gradients; stops on ||r|| <= max(tol_abs, tol_rel ||b||).
inline Eigen::VectorXd pcg(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& Aop,
                           const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& Minv,
                           const Eigen::VectorXd& b, double tol_rel, double tol_abs, int maxit,
                           PcgReport* report = nullptr) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  double target = std::max(tol_abs, tol_rel * b.norm());
  PcgReport rep;
  rep.residual = r.norm();
  if (rep.residual <= target) {
    rep.converged = true;
    if (report) *report = rep;
    return x;
  }
  Eigen::VectorXd z = Minv(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= maxit; ++it) {
    Eigen::VectorXd Ap = Aop(p);
    double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    rep.iterations = it;
    rep.residual = r.norm();
    if (rep.residual <= target) {
      rep.converged = true;
      break;
    }
    z = Minv(r);
    double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  if (report) *report = rep;
  return x;
}

// Inner solver for the standard-stiffness correction: direct below the size
// threshold, otherwise conjugate gradients preconditioned by the V-cycle.
class InnerSolver {
 public:
  InnerSolver() = default;

  void setup_direct(const SpMat& Astd) {
    direct_ = true;
    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(Astd);
    if (ldlt_->info() != Eigen::Success)
      throw FactorizationFailure("standard stiffness factorization failed");
  }
  void setup_iterative(const SpMat& Astd, Multigrid mg) {
    direct_ = false;
    A_ = Astd;
    mg_ = std::move(mg);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (direct_) {
      last_iterations = -1;
      return ldlt_->solve(b);
    }
    PcgReport rep;
    Eigen::VectorXd x = pcg([&](const Eigen::VectorXd& v) { return A_ * v; },
                            [&](const Eigen::VectorXd& v) { return mg_.apply(v); }, b, tol_rel,
                            tol_abs, maxit, &rep);
    if (!rep.converged)
      throw InnerSolveStagnation("inner solve did not reach tolerance in " +
                                 std::to_string(maxit) + " iterations");
    last_iterations = rep.iterations;
    return x;
  }

  bool direct() const { return direct_; }
  double tol_rel = 1e-8, tol_abs = 1e-8;
  int maxit = 200;
  mutable int last_iterations = -1;  // -1: direct solve

 private:
  bool direct_ = true;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  SpMat A_;
  Multigrid mg_;
};

// ---------------------------------------------------------------------------
// The full preconditioner: n_s corrected smoothing steps, one standard-
// stiffness correction, n_s transposed smoothing steps. Symmetric whenever
// the inner solve is (exactly so for the direct branch).
// ---------------------------------------------------------------------------
class PreconditionerB {
 public:
  PreconditionerB(const SpMat& A, int m_near, InnerSolver inner, int n_s = 1)
      : A_(&A), R_(A, m_near), inner_(std::move(inner)), ns_(n_s) {}

  Eigen::VectorXd apply(const Eigen::VectorXd& g) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(g.size());
    for (int s = 0; s < ns_; ++s) v = R_.apply(g, v);
    v += inner_.solve(g - (*A_) * v);
    if (inner_.last_iterations > max_inner_iterations)
      max_inner_iterations = inner_.last_iterations;
    for (int s = 0; s < ns_; ++s) v = R_.apply_transpose(g, v);
    return v;
  }

  const InnerSolver& inner() const { return inner_; }
  mutable int max_inner_iterations = -1;

 private:
  const SpMat* A_;
  SmootherR R_;
  InnerSolver inner_;
  int ns_;
};

// ---------------------------------------------------------------------------
// Two-norm condition number of the free-dof block by Lanczos with full
// reorthogonalization (smallest eigenvalue through the factorized inverse).
// ---------------------------------------------------------------------------
struct CondEstimate {
  double lambda_max = 0, lambda_min = 0, cond = 0;
  bool settled = false;
};

namespace detail {
inline std::pair<double, bool> lanczos_max(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op, int n, int iters) {
  std::mt19937 rng(42);
  std::normal_distribution<double> dist;
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = dist(rng);
  q.normalize();
  std::vector<Eigen::VectorXd> Q{q};
  std::vector<double> alpha, beta;
  double prev = 0;
  bool settled = false;
  double current = 0;
  for (int k = 0; k < iters; ++k) {
    Eigen::VectorXd w = op(Q[k]);
    double a = Q[k].dot(w);
    alpha.push_back(a);
    w -= a * Q[k];
    if (k > 0) w -= beta[k - 1] * Q[k - 1];
    for (const auto& qq : Q) w -= qq.dot(w) * qq;  // full reorthogonalization
    double b = w.norm();
    // tridiagonal Ritz values
    int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    current = es.eigenvalues().maxCoeff();
    if (k > 2 && std::abs(current - prev) <= 1e-2 * std::abs(current)) settled = true;
    prev = current;
    if (b < 1e-12 * std::abs(a)) {
      settled = true;
      break;
    }
    beta.push_back(b);
    Q.push_back(w / b);
  }
  return {current, settled};
}
}  // namespace detail

inline CondEstimate estimate_cond2(const SpMat& A, const std::vector<char>& is_dirichlet,
                                   int iters = 50) {
  const int n = static_cast<int>(A.rows());
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i)
    if (!is_dirichlet[i]) free_idx.push_back(i);
  const int nf = static_cast<int>(free_idx.size());
  std::vector<int> inv(n, -1);
  for (int k = 0; k < nf; ++k) inv[free_idx[k]] = k;
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      if (inv[it.row()] >= 0 && inv[it.col()] >= 0)
        trips.emplace_back(inv[it.row()], inv[it.col()], it.value());
  SpMat Aff(nf, nf);
  Aff.setFromTriplets(trips.begin(), trips.end());

  Eigen::SimplicialLDLT<SpMat> ldlt(Aff);
  if (ldlt.info() != Eigen::Success)
    throw FactorizationFailure("free-dof block factorization failed");

  auto [lmax, s1] = detail::lanczos_max([&](const Eigen::VectorXd& v) { return Aff * v; },
                                        nf, iters);
  auto [lmax_inv, s2] = detail::lanczos_max(
      [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return ldlt.solve(v); }, nf, iters);
  CondEstimate est;
  est.lambda_max = lmax;
  est.lambda_min = 1.0 / lmax_inv;
  est.cond = lmax * lmax_inv;
  est.settled = s1 && s2;
  return est;
}

}  // namespace ifem
