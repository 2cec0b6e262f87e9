#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "ifem/geometry.hpp"
#include "ifem/ife_local.hpp"
#include "ifem/mesh.hpp"
#include "ifem/problem.hpp"

namespace ifem {

enum class StabVariant { Lifting, Penalty };

// One unknown per mesh face (face-average dof). Faces near the interface are
// numbered first so the leading block of any assembled matrix is the
// near-interface block.
struct DofMap {
  int n_dofs = 0;
  int n_near = 0;  // dofs [0, n_near) sit on near-interface faces
  std::vector<int> face_dof, dof_face;
  std::vector<char> dof_boundary;
};

template <int N>
DofMap build_dof_map(const Mesh<N>& mesh, const Classification<N>& cls) {
  DofMap dm;
  const int nf = mesh.num_faces();
  dm.face_dof.assign(nf, -1);
  for (int f = 0; f < nf; ++f)
    if (cls.face_near[f]) dm.face_dof[f] = dm.n_dofs++;
  dm.n_near = dm.n_dofs;
  for (int f = 0; f < nf; ++f)
    if (dm.face_dof[f] < 0) dm.face_dof[f] = dm.n_dofs++;
  dm.dof_face.assign(dm.n_dofs, -1);
  dm.dof_boundary.assign(dm.n_dofs, 0);
  for (int f = 0; f < nf; ++f) {
    dm.dof_face[dm.face_dof[f]] = f;
    dm.dof_boundary[dm.face_dof[f]] = mesh.faces[f].boundary;
  }
  return dm;
}

// Per-element cache: basis pairs (immersed on cut elements, plain
// nonconforming otherwise), jump corrections, and the side-wise coefficient
// integrals used by volume terms and liftings.
template <int N>
struct LocalElem {
  using Mat = Eigen::Matrix<double, N, N>;
  bool cut = false;
  CutElementData<N> data;
  IfeLocal<N> local;
  Correction<N> corr;
  std::array<AffinePair<N>, N + 1> basis;
  Mat IBp = Mat::Zero(), IBm = Mat::Zero();  // integral of B over T+ / T-
};

template <int N>
struct Discretization {
  const Mesh<N>* mesh = nullptr;
  const LevelSetProblem<N>* prob = nullptr;
  Classification<N> cls;
  GeometryOptions gopt;
  StabVariant stab = StabVariant::Lifting;
  double stab_weight = 8.0;   // lifting variant
  double eta_scale = 2.0;     // penalty variant
  DofMap dofmap;
  std::vector<LocalElem<N>> elems;

  int elem_dof(int e, int i) const { return dofmap.face_dof[mesh->element_faces[e][i]]; }

  // total discrete solution (coefficients + local jump correction) at x
  double eval(const Eigen::VectorXd& u, int e, const Eigen::Matrix<double, N, 1>& x,
              int side) const {
    double s = 0;
    for (int i = 0; i <= N; ++i) s += u[elem_dof(e, i)] * elems[e].basis[i].eval(x, side);
    if (elems[e].cut) s += elems[e].corr.xi.eval(x, side);
    return s;
  }
  Eigen::Matrix<double, N, 1> eval_grad(const Eigen::VectorXd& u, int e, int side) const {
    Eigen::Matrix<double, N, 1> g = Eigen::Matrix<double, N, 1>::Zero();
    for (int i = 0; i <= N; ++i) g += u[elem_dof(e, i)] * elems[e].basis[i].side(side).gradient;
    if (elems[e].cut) g += elems[e].corr.xi.side(side).gradient;
    return g;
  }
};

template <int N>
Discretization<N> build_discretization(const Mesh<N>& mesh, const LevelSetProblem<N>& prob,
                                       const GeometryOptions& gopt = {},
                                       StabVariant stab = StabVariant::Lifting) {
  using Mat = Eigen::Matrix<double, N, N>;
  Discretization<N> d;
  d.mesh = &mesh;
  d.prob = &prob;
  d.gopt = gopt;
  d.stab = stab;
  d.cls = classify_elements(mesh, prob);
  d.dofmap = build_dof_map(mesh, d.cls);
  d.elems.resize(mesh.num_elements());
  auto vol_rule = simplex_rule<N>(gopt.volume_order);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    LocalElem<N>& le = d.elems[e];
    if (d.cls.elem_is_interface[e]) {
      le.cut = true;
      le.data = build_cut_data(mesh, e, prob, d.cls, gopt);
      le.local = build_ife_basis(mesh, e, le.data);
      le.corr = build_correction(le.data, le.local, prob);
      le.basis = le.local.basis;
      for (size_t q = 0; q < le.data.quad_plus.pts.size(); ++q)
        le.IBp += le.data.quad_plus.wts[q] * prob.B_plus(le.data.quad_plus.pts[q]);
      for (size_t q = 0; q < le.data.quad_minus.pts.size(); ++q)
        le.IBm += le.data.quad_minus.wts[q] * prob.B_minus(le.data.quad_minus.pts[q]);
    } else {
      auto lam = cr_basis(mesh, e);
      for (int i = 0; i <= N; ++i) le.basis[i] = AffinePair<N>::continuous(lam[i]);
      PhysRule<N> pr;
      map_rule<N, N>(vol_rule, mesh.element_vertices(e), pr);
      int side = d.cls.elem_side[e];
      Mat IB = Mat::Zero();
      for (size_t q = 0; q < pr.pts.size(); ++q) IB += pr.wts[q] * prob.B(side, pr.pts[q]);
      (side >= 0 ? le.IBp : le.IBm) = IB;
    }
  }
  return d;
}

template <int N>
struct System {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd rhs;
  Eigen::VectorXd dirichlet;       // prescribed boundary values (0 elsewhere)
  std::vector<char> is_dirichlet;  // per dof
};

namespace detail {

// Extended local function on a face patch: a dof basis function, the known
// jump correction (coefficient +1), or the boundary-data jump (coefficient
// -1, value-only). Each lives on one or both adjacent elements.
template <int N>
struct PatchFn {
  int dof = -1;        // global dof, or -1 for known slots
  double coeff = 0.0;  // known coefficient (uJ: +1, boundary data: -1)
  const AffinePair<N>* fn[2] = {nullptr, nullptr};
  bool data_slot = false;  // boundary-data: value g(x) on element 0, no gradient
};

inline void scatter(std::vector<Eigen::Triplet<double>>& trips, Eigen::VectorXd& rhs, int di,
                    int dj, double cj, double v) {
  if (dj >= 0)
    trips.emplace_back(di, dj, v);
  else
    rhs[di] -= cj * v;
}

// Face quadrature resolving every breakpoint of the integrand: the interface
// crossing (coefficient side) and the linearization-plane crossings of both
// adjacent cut elements (branch selection of their local functions).
template <int N>
struct FaceQP {
  Eigen::Matrix<double, N, 1> x;
  double w;
  int s_phi;    // side of the interface (coefficient, data)
  int s_el[2];  // branch of each adjacent element's local pair
};

template <int N>
std::vector<FaceQP<N>> split_face_rule(const Mesh<N>& mesh, int f, const LevelSetProblem<N>& prob,
                                       const Discretization<N>& d, const int T[2], int order) {
  using Vec = Eigen::Matrix<double, N, 1>;
  struct Piece {
    std::array<Vec, N> v;
    int s_phi, s_el[2];
  };
  auto fv = mesh.face_vertices(f);
  std::vector<Piece> pieces;
  {
    auto sp = split_by_levelset<N, N - 1>(fv, prob);
    for (const auto& p : sp.plus) pieces.push_back({p, +1, {+1, +1}});
    for (const auto& p : sp.minus) pieces.push_back({p, -1, {+1, +1}});
  }
  for (int t = 0; t < 2; ++t) {
    if (T[t] < 0 || !d.elems[T[t]].cut) continue;
    const auto& fr = d.elems[T[t]].data.frame;
    std::vector<Piece> next;
    for (const auto& piece : pieces) {
      auto sp = split_by_plane<N, N - 1>(piece.v, fr.x0_bar, fr.n_bar, fr.h_T);
      for (const auto& p : sp.plus) {
        Piece q = piece;
        q.v = p;
        q.s_el[t] = +1;
        next.push_back(q);
      }
      for (const auto& p : sp.minus) {
        Piece q = piece;
        q.v = p;
        q.s_el[t] = -1;
        next.push_back(q);
      }
    }
    pieces = std::move(next);
  }
  auto gr = simplex_rule<N - 1>(order);
  std::vector<FaceQP<N>> out;
  for (const auto& piece : pieces) {
    PhysRule<N> pr;
    map_rule<N, N - 1>(gr, piece.v, pr);
    for (size_t q = 0; q < pr.pts.size(); ++q)
      out.push_back({pr.pts[q], pr.wts[q], piece.s_phi, {piece.s_el[0], piece.s_el[1]}});
  }
  return out;
}

}  // namespace detail

// Assemble the full method matrix and right-hand side (before boundary
// elimination): volume diffusion, interface-face consistency terms, and the
// gradient-lifting (or face-penalty) stabilization. Known pieces — the local
// jump correction and the boundary data on cut boundary faces — are folded
// into the right-hand side so the discrete problem stays symmetric.
template <int N>
System<N> assemble(const Discretization<N>& d, bool include_b = true, bool include_s = true,
                   bool include_rhs = true) {
  using Vec = Eigen::Matrix<double, N, 1>;
  const Mesh<N>& mesh = *d.mesh;
  const LevelSetProblem<N>& prob = *d.prob;
  const int n = d.dofmap.n_dofs;

  System<N> sys;
  sys.rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;

  // --- volume terms -------------------------------------------------------
  auto err_rule = simplex_rule<N>(d.gopt.volume_order);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalElem<N>& le = d.elems[e];
    int dofs[N + 1];
    for (int i = 0; i <= N; ++i) dofs[i] = d.elem_dof(e, i);
    auto a_bil = [&](const AffinePair<N>& u, const AffinePair<N>& v) {
      return u.plus.gradient.dot(le.IBp * v.plus.gradient) +
             u.minus.gradient.dot(le.IBm * v.minus.gradient);
    };
    for (int i = 0; i <= N; ++i) {
      for (int j = 0; j <= N; ++j)
        trips.emplace_back(dofs[i], dofs[j], a_bil(le.basis[j], le.basis[i]));
      if (le.cut && include_rhs) sys.rhs[dofs[i]] -= a_bil(le.corr.xi, le.basis[i]);
    }
    if (!include_rhs) continue;
    // source term and interface flux-jump data
    if (le.cut) {
      for (int i = 0; i <= N; ++i) {
        double s = 0;
        for (size_t q = 0; q < le.data.quad_plus.pts.size(); ++q)
          s += le.data.quad_plus.wts[q] * prob.f_plus(le.data.quad_plus.pts[q]) *
               le.basis[i].plus(le.data.quad_plus.pts[q]);
        for (size_t q = 0; q < le.data.quad_minus.pts.size(); ++q)
          s += le.data.quad_minus.wts[q] * prob.f_minus(le.data.quad_minus.pts[q]) *
               le.basis[i].minus(le.data.quad_minus.pts[q]);
        for (size_t q = 0; q < le.data.quad_interface.pts.size(); ++q) {
          const Vec& x = le.data.quad_interface.pts[q];
          double avg = 0.5 * (le.basis[i].plus(x) + le.basis[i].minus(x));
          s -= le.data.quad_interface.wts[q] * prob.g_N(x) * avg;
        }
        sys.rhs[dofs[i]] += s;
      }
    } else {
      PhysRule<N> pr;
      map_rule<N, N>(err_rule, mesh.element_vertices(e), pr);
      int side = d.cls.elem_side[e];
      for (int i = 0; i <= N; ++i) {
        double s = 0;
        for (size_t q = 0; q < pr.pts.size(); ++q)
          s += pr.wts[q] * prob.f(side, pr.pts[q]) * le.basis[i].side(side)(pr.pts[q]);
        sys.rhs[dofs[i]] += s;
      }
    }
  }

  // --- interface-face terms ----------------------------------------------
  const AffinePair<N> zero_pair{};
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (!d.cls.face_is_interface[f]) continue;
    const auto& face = mesh.faces[f];
    const bool bnd = face.boundary;
    const int T[2] = {face.elem[0], bnd ? -1 : face.elem[1]};
    const Vec& nF = face.normal;

    std::vector<detail::PatchFn<N>> fns;
    for (int t = 0; t < 2; ++t) {
      if (T[t] < 0) continue;
      for (int i = 0; i <= N; ++i) {
        int dof = d.elem_dof(T[t], i);
        bool seen = false;
        for (auto& p : fns)
          if (p.dof == dof) {
            p.fn[t] = &d.elems[T[t]].basis[i];
            seen = true;
          }
        if (!seen) {
          detail::PatchFn<N> p;
          p.dof = dof;
          p.fn[t] = &d.elems[T[t]].basis[i];
          fns.push_back(p);
        }
      }
    }
    if (include_rhs) {
      detail::PatchFn<N> uj;
      uj.coeff = 1.0;
      bool any = false;
      for (int t = 0; t < 2; ++t)
        if (T[t] >= 0 && d.elems[T[t]].cut) {
          uj.fn[t] = &d.elems[T[t]].corr.xi;
          any = true;
        }
      if (any) fns.push_back(uj);
      if (bnd) {
        detail::PatchFn<N> gd;
        gd.coeff = -1.0;
        gd.data_slot = true;
        fns.push_back(gd);
      }
    }
    const int nfn = static_cast<int>(fns.size());

    std::vector<detail::FaceQP<N>> qr =
        detail::split_face_rule(mesh, f, prob, d, T, d.gopt.face_order);
    const int nq = static_cast<int>(qr.size());
    // traces: jump [v] = v|T0 - v|T1 (v|T0 on a boundary face), flux average
    Eigen::MatrixXd jump(nq, nfn), flux(nq, nfn);
    std::vector<Eigen::Matrix<double, N, N>> Bq(nq);
    for (int q = 0; q < nq; ++q) Bq[q] = prob.B(qr[q].s_phi, qr[q].x);
    for (int k = 0; k < nfn; ++k) {
      for (int q = 0; q < nq; ++q) {
        const Vec& x = qr[q].x;
        double v0 = 0, v1 = 0, fl = 0;
        if (fns[k].data_slot) {
          v0 = prob.g_boundary(x);
        } else {
          if (fns[k].fn[0]) {
            v0 = fns[k].fn[0]->eval(x, qr[q].s_el[0]);
            fl += nF.dot(Bq[q] * fns[k].fn[0]->side(qr[q].s_el[0]).gradient);
          }
          if (fns[k].fn[1]) {
            v1 = fns[k].fn[1]->eval(x, qr[q].s_el[1]);
            fl += nF.dot(Bq[q] * fns[k].fn[1]->side(qr[q].s_el[1]).gradient);
          }
          if (!bnd) fl *= 0.5;
        }
        jump(q, k) = v0 - v1;
        flux(q, k) = fl;
      }
    }

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nfn, nfn);
    if (include_b) {
      for (int i = 0; i < nfn; ++i)
        for (int j = 0; j < nfn; ++j) {
          double s = 0;
          for (int q = 0; q < nq; ++q)
            s += qr[q].w * (flux(q, i) * jump(q, j) + flux(q, j) * jump(q, i));
          M(i, j) -= s;
        }
    }
    if (include_s) {
      if (d.stab == StabVariant::Penalty) {
        double bmax = 0;
        for (int q = 0; q < nq; ++q) {
          Eigen::Matrix<double, N, N> Bp = prob.B_plus(qr[q].x);
          Eigen::Matrix<double, N, N> Bm = prob.B_minus(qr[q].x);
          bmax = std::max(bmax, Bp.template selfadjointView<Eigen::Lower>().operatorNorm());
          bmax = std::max(bmax, Bm.template selfadjointView<Eigen::Lower>().operatorNorm());
        }
        double eta = d.eta_scale * bmax / mesh.face_diameter(f);
        for (int i = 0; i < nfn; ++i)
          for (int j = 0; j < nfn; ++j) {
            double s = 0;
            for (int q = 0; q < nq; ++q) s += qr[q].w * jump(q, i) * jump(q, j);
            M(i, j) += eta * s;
          }
      } else {
        // gradient lifting r(w) in the patch space of immersed gradients:
        // (B r(w), q) = int_F {n'B q} w, stabilization 8 (B r[u], B r[v])
        int nel = bnd ? 1 : 2;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N * nel, N * nel);
        // q-field traces: value of q_k^t on side s at face points
        std::vector<std::array<Vec, 2>> qside(N * nel);  // [field]{plus,minus}
        for (int t = 0; t < nel; ++t) {
          const LocalElem<N>& le = d.elems[T[t]];
          Vec alpha = Vec::Zero();
          if (le.cut) alpha = grad_space_alpha(le.data.frame);
          for (int k = 0; k < N; ++k) {
            Vec ek = Vec::Unit(k);
            Vec qp = ek, qm = ek;
            if (le.cut) qp += alpha[k] * le.data.frame.n_bar;
            qside[t * N + k] = {qp, qm};
            for (int l = 0; l <= k; ++l) {
              Vec lp = qside[t * N + l][0], lm = qside[t * N + l][1];
              double g = qp.dot(le.IBp * lp) + qm.dot(le.IBm * lm);
              G(t * N + k, t * N + l) = G(t * N + l, t * N + k) = g;
            }
          }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() != Eigen::Success)
          throw SingularLifting("lifting Gram matrix is not positive definite");
        double fac = bnd ? 1.0 : 0.5;
        Eigen::MatrixXd R(N * nel, nfn);
        for (int k = 0; k < N * nel; ++k)
          for (int i = 0; i < nfn; ++i) {
            double s = 0;
            for (int q = 0; q < nq; ++q) {
              const Vec& qv = qside[k][qr[q].s_el[k / N] >= 0 ? 0 : 1];
              s += qr[q].w * fac * nF.dot(Bq[q] * qv) * jump(q, i);
            }
            R(k, i) = s;
          }
        M += d.stab_weight * R.transpose() * llt.solve(R);
      }
    }
    for (int i = 0; i < nfn; ++i) {
      if (fns[i].dof < 0) continue;
      for (int j = 0; j < nfn; ++j)
        detail::scatter(trips, sys.rhs, fns[i].dof, fns[j].dof, fns[j].coeff, M(i, j));
    }
  }

  sys.A.resize(n, n);
  sys.A.setFromTriplets(trips.begin(), trips.end());

  // boundary values: face averages of the boundary data (interface-aware)
  sys.dirichlet = Eigen::VectorXd::Zero(n);
  sys.is_dirichlet.assign(n, 0);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    if (!mesh.faces[f].boundary) continue;
    int dof = d.dofmap.face_dof[f];
    sys.is_dirichlet[dof] = 1;
    SideRule<N> qr = interface_face_rule(mesh, f, prob, d.gopt.face_order);
    double s = 0, w = 0;
    for (size_t q = 0; q < qr.pts.size(); ++q) {
      s += qr.wts[q] * prob.g_boundary(qr.pts[q]);
      w += qr.wts[q];
    }
    sys.dirichlet[dof] = s / w;
  }
  return sys;
}

// Symmetric elimination of prescribed dofs: fold columns into the rhs, then
// replace the constrained rows/columns by the identity.
inline void eliminate_dirichlet(Eigen::SparseMatrix<double>& A, Eigen::VectorXd& rhs,
                                const Eigen::VectorXd& values,
                                const std::vector<char>& is_dirichlet) {
  const int n = static_cast<int>(A.rows());
  Eigen::VectorXd bc = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if (is_dirichlet[i]) bc[i] = values[i];
  rhs -= A * bc;
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      if (is_dirichlet[it.row()] || is_dirichlet[it.col()]) continue;
      trips.emplace_back(it.row(), it.col(), it.value());
    }
  for (int i = 0; i < n; ++i)
    if (is_dirichlet[i]) {
      trips.emplace_back(i, i, 1.0);
      rhs[i] = values[i];
    }
  A.setZero();
  A.setFromTriplets(trips.begin(), trips.end());
}

// Standard nonconforming stiffness matrix with the discontinuous coefficient
// (exact side-wise integration), used by the inner solver of the
// preconditioner. Constrained rows/columns are identity.
template <int N>
Eigen::SparseMatrix<double> assemble_std_stiffness(const Discretization<N>& d,
                                                   const std::vector<char>& is_dirichlet) {
  const Mesh<N>& mesh = *d.mesh;
  const int n = d.dofmap.n_dofs;
  std::vector<Eigen::Triplet<double>> trips;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const LocalElem<N>& le = d.elems[e];
    auto lam = cr_basis(mesh, e);
    Eigen::Matrix<double, N, N> IB = le.IBp + le.IBm;
    for (int i = 0; i <= N; ++i) {
      int di = d.elem_dof(e, i);
      if (is_dirichlet[di]) continue;
      for (int j = 0; j <= N; ++j) {
        int dj = d.elem_dof(e, j);
        if (is_dirichlet[dj]) continue;
        trips.emplace_back(di, dj, lam[i].gradient.dot(IB * lam[j].gradient));
      }
    }
  }
  for (int i = 0; i < n; ++i)
    if (is_dirichlet[i]) trips.emplace_back(i, i, 1.0);
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

inline Eigen::SparseMatrix<double> extract_interface_block(const Eigen::SparseMatrix<double>& A,
                                                           int m) {
  Eigen::SparseMatrix<double> block = A.topLeftCorner(m, m);
  block.makeCompressed();
  return block;
}

}  // namespace ifem
