#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <unordered_map>
#include <vector>

#include "ifem/errors.hpp"
#include "ifem/mesh.hpp"
#include "ifem/problem.hpp"
#include "ifem/quadrature.hpp"

namespace ifem {

struct GeometryOptions {
  double mu = 0.5;             // interface patch size parameter
  int volume_order = 2;        // volume quadrature for assembly
  int error_order = 4;         // volume quadrature for error norms
  int interface_order = 3;     // surface quadrature on the interface
  int face_order = 4;          // face quadrature for interface-face terms
  int gamma_ext_points = 5;    // Gauss points per direction on the patch
  double frame_deviation_c = 10.0;  // bound constant for |x_tilde - x_bar| <= C h^2
};

inline int sign_with_tol(double v, double tol) {
  if (v > tol) return +1;
  if (v < -tol) return -1;
  return 0;
}

// ---------------------------------------------------------------------------
// Simplex splitting by a codimension-one cut.
//
// `signs` holds -1/0/+1 per vertex (zeros join the plus side); `cut(i,j)`
// returns the cut point on the edge between vertices i (nonnegative) and j
// (negative). Sub-simplices tile the input exactly; in the 2|2 tetrahedron
// case both sides use the same quad diagonal so the tiling stays consistent.
// ---------------------------------------------------------------------------
template <int N, int K>
struct SplitResult {
  using Vec = Eigen::Matrix<double, N, 1>;
  std::vector<std::array<Vec, K + 1>> plus, minus;
  std::vector<std::array<Vec, K>> facets;  // piecewise-linear cut facets
};

template <int N, int K>
SplitResult<N, K> split_simplex(const std::array<Eigen::Matrix<double, N, 1>, K + 1>& v,
                                const std::array<int, K + 1>& signs,
                                const std::function<Eigen::Matrix<double, N, 1>(int, int)>& cut) {
  using Vec = Eigen::Matrix<double, N, 1>;
  SplitResult<N, K> out;
  std::vector<int> P, M;
  for (int i = 0; i <= K; ++i) (signs[i] < 0 ? M : P).push_back(i);
  if (M.empty()) {
    out.plus.push_back(v);
    return out;
  }
  if (P.empty()) {
    out.minus.push_back(v);
    return out;
  }
  if constexpr (K == 1) {
    Vec c = cut(P[0], M[0]);
    out.plus.push_back({v[P[0]], c});
    out.minus.push_back({c, v[M[0]]});
    out.facets.push_back({c});
  } else if constexpr (K == 2) {
    auto corner = [&](const std::vector<int>& one, const std::vector<int>& two, bool one_neg) {
      int a = one[0], b = two[0], d = two[1];
      Vec cb = one_neg ? cut(b, a) : cut(a, b);
      Vec cd = one_neg ? cut(d, a) : cut(a, d);
      std::array<Vec, 3> tri = {v[a], cb, cd};
      std::array<Vec, 3> q1 = {v[b], v[d], cd};
      std::array<Vec, 3> q2 = {v[b], cd, cb};
      if (one_neg) {
        out.minus.push_back(tri);
        out.plus.push_back(q1);
        out.plus.push_back(q2);
      } else {
        out.plus.push_back(tri);
        out.minus.push_back(q1);
        out.minus.push_back(q2);
      }
      out.facets.push_back({cb, cd});
    };
    if (M.size() == 1)
      corner(M, P, true);
    else
      corner(P, M, false);
  } else {
    static_assert(K == 3);
    if (M.size() == 1 || M.size() == 3) {
      // one vertex on its own side: corner tet + wedge (3 tets)
      bool corner_neg = (M.size() == 1);
      int a = corner_neg ? M[0] : P[0];
      const std::vector<int>& rest = corner_neg ? P : M;
      int b = rest[0], c = rest[1], d = rest[2];
      auto cp = [&](int r) { return corner_neg ? cut(r, a) : cut(a, r); };
      Vec cb = cp(b), cc = cp(c), cd = cp(d);
      auto& corner_side = corner_neg ? out.minus : out.plus;
      auto& wedge_side = corner_neg ? out.plus : out.minus;
      corner_side.push_back({v[a], cb, cc, cd});
      wedge_side.push_back({v[b], cb, cc, cd});
      wedge_side.push_back({v[b], cc, v[c], v[d]});
      wedge_side.push_back({v[b], cc, v[d], cd});
      out.facets.push_back({cb, cc, cd});
    } else {
      // 2|2 split: quad cross-section p_ik p_jk p_jl p_il, diagonal (p_ik, p_jl)
      int i = P[0], j = P[1], k = M[0], l = M[1];
      Vec pik = cut(i, k), pil = cut(i, l), pjk = cut(j, k), pjl = cut(j, l);
      out.plus.push_back({v[i], v[j], pjk, pjl});
      out.plus.push_back({v[i], pik, pjk, pjl});
      out.plus.push_back({v[i], pik, pjl, pil});
      out.minus.push_back({v[k], v[l], pil, pjl});
      out.minus.push_back({v[k], pik, pil, pjl});
      out.minus.push_back({v[k], pik, pjl, pjk});
      out.facets.push_back({pik, pjk, pjl});
      out.facets.push_back({pik, pjl, pil});
    }
  }
  return out;
}

// Split by the hyperplane through x0 with unit normal n (exact linear cut).
template <int N, int K>
SplitResult<N, K> split_by_plane(const std::array<Eigen::Matrix<double, N, 1>, K + 1>& v,
                                 const Eigen::Matrix<double, N, 1>& x0,
                                 const Eigen::Matrix<double, N, 1>& n, double h_scale) {
  std::array<double, K + 1> d;
  double dmax = 0;
  for (int i = 0; i <= K; ++i) {
    d[i] = (v[i] - x0).dot(n);
    dmax = std::max(dmax, std::abs(d[i]));
  }
  double tol = 1e-13 * std::max(h_scale, dmax);
  std::array<int, K + 1> signs;
  for (int i = 0; i <= K; ++i) signs[i] = sign_with_tol(d[i], tol);
  auto cutfn = [&](int i, int j) -> Eigen::Matrix<double, N, 1> {
    if (signs[i] == 0) return v[i];
    double t = d[i] / (d[i] - d[j]);
    return v[i] + t * (v[j] - v[i]);
  };
  return split_simplex<N, K>(v, signs, cutfn);
}

// Split by the zero set of phi: edge roots by bisection, then the chordal
// (piecewise-linear) subdivision.
template <int N, int K>
SplitResult<N, K> split_by_levelset(const std::array<Eigen::Matrix<double, N, 1>, K + 1>& v,
                                    const LevelSetProblem<N>& prob) {
  std::array<double, K + 1> p;
  double pmax = 0;
  for (int i = 0; i <= K; ++i) {
    p[i] = prob.phi(v[i]);
    pmax = std::max(pmax, std::abs(p[i]));
  }
  double tol = 1e-13 * std::max(pmax, 1e-300);
  std::array<int, K + 1> signs;
  for (int i = 0; i <= K; ++i) signs[i] = sign_with_tol(p[i], tol);
  auto cutfn = [&](int i, int j) -> Eigen::Matrix<double, N, 1> {
    if (signs[i] == 0) return v[i];
    Eigen::Matrix<double, N, 1> a = v[i], b = v[j];
    double fa = p[i];
    double len = (b - a).norm();
    double eps = 1e-13 * len;
    while ((b - a).norm() > eps) {
      Eigen::Matrix<double, N, 1> m = 0.5 * (a + b);
      double fm = prob.phi(m);
      if ((fa > 0) == (fm > 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  };
  return split_simplex<N, K>(v, signs, cutfn);
}

// ---------------------------------------------------------------------------
// Classification of mesh entities against the level set.
// ---------------------------------------------------------------------------
template <int N>
struct Classification {
  std::vector<char> elem_is_interface;   // T_h^Gamma
  std::vector<int8_t> elem_side;         // +-1 for non-interface elements, 0 otherwise
  std::vector<char> elem_near;           // Omega_h^Gamma (elements touching T_h^Gamma)
  std::vector<char> face_is_interface;   // F_h^Gamma
  std::vector<char> face_near;           // F_h^{Gamma,near}
  std::vector<int> interface_elements;
  std::vector<double> vertex_phi;
  std::vector<int8_t> vertex_sign;

  int num_interface_elements() const { return static_cast<int>(interface_elements.size()); }
};

namespace detail {
// Number of boundary crossing points of a triangle with vertex signs s:
// strictly crossed edges plus on-interface vertices (the latter only when the
// triangle is genuinely cut).
inline int triangle_cut_points(int s0, int s1, int s2) {
  int s[3] = {s0, s1, s2};
  bool has_p = false, has_m = false;
  for (int i = 0; i < 3; ++i) {
    has_p |= s[i] > 0;
    has_m |= s[i] < 0;
  }
  if (!(has_p && has_m)) return 0;
  int cnt = 0;
  for (int i = 0; i < 3; ++i) {
    if (s[i] == 0) ++cnt;
    for (int j = i + 1; j < 3; ++j)
      if (s[i] * s[j] < 0) ++cnt;
  }
  return cnt;
}
}  // namespace detail

template <int N>
Classification<N> classify_elements(const Mesh<N>& mesh, const LevelSetProblem<N>& prob) {
  Classification<N> cls;
  const int nv = mesh.num_vertices(), ne = mesh.num_elements(), nf = mesh.num_faces();
  cls.vertex_phi.resize(nv);
  cls.vertex_sign.resize(nv);
  double scale = 0;
  for (int i = 0; i < nv; ++i) {
    cls.vertex_phi[i] = prob.phi(mesh.vertices[i]);
    scale = std::max(scale, std::abs(cls.vertex_phi[i]));
  }
  const double tol = 1e-13 * std::max(scale, 1e-300);
  for (int i = 0; i < nv; ++i) cls.vertex_sign[i] = (int8_t)sign_with_tol(cls.vertex_phi[i], tol);

  cls.elem_is_interface.assign(ne, 0);
  cls.elem_side.assign(ne, 0);
  for (int e = 0; e < ne; ++e) {
    bool has_p = false, has_m = false;
    for (int i = 0; i <= N; ++i) {
      int s = cls.vertex_sign[mesh.elements[e][i]];
      has_p |= s > 0;
      has_m |= s < 0;
    }
    if (has_p && has_m) {
      cls.elem_is_interface[e] = 1;
      cls.interface_elements.push_back(e);
    } else {
      cls.elem_side[e] = has_m ? -1 : +1;
    }
  }

  // Interface faces; degenerate cuts (phi vanishing on a whole face) rejected.
  cls.face_is_interface.assign(nf, 0);
  for (int f = 0; f < nf; ++f) {
    bool has_p = false, has_m = false;
    int zeros = 0;
    for (int i = 0; i < N; ++i) {
      int s = cls.vertex_sign[mesh.faces[f].v[i]];
      has_p |= s > 0;
      has_m |= s < 0;
      zeros += (s == 0);
    }
    if (zeros == N)
      throw DegenerateCut("level set vanishes on an entire mesh face");
    cls.face_is_interface[f] = (has_p && has_m) ? 1 : 0;
  }

  // Assumption: every cut triangle (element in 2D, tet face in 3D) is crossed
  // at exactly two boundary points; a cut tet has 3 or 4 cut faces.
  auto vsign = [&](int vid) { return (int)cls.vertex_sign[vid]; };
  for (int e : cls.interface_elements) {
    const auto& el = mesh.elements[e];
    if constexpr (N == 2) {
      int c = detail::triangle_cut_points(vsign(el[0]), vsign(el[1]), vsign(el[2]));
      if (c != 2)
        throw AssumptionViolation("interface crosses an element at " + std::to_string(c) +
                                  " boundary points; mesh too coarse for the interface");
    } else {
      int ncut = 0, nzero = 0;
      for (int i = 0; i <= N; ++i) nzero += (vsign(el[i]) == 0);
      for (int i = 0; i <= N; ++i) {
        const auto& fv = mesh.faces[mesh.element_faces[e][i]].v;
        int c = detail::triangle_cut_points(vsign(fv[0]), vsign(fv[1]), vsign(fv[2]));
        if (c != 0 && c != 2)
          throw AssumptionViolation("interface crosses a tet face at " + std::to_string(c) +
                                    " boundary points");
        ncut += (c == 2);
      }
      // vertices lying exactly on the interface shrink the set of strictly cut
      // faces; the boundary trace closes through those vertices instead
      if (ncut + nzero < 3 || ncut > 4)
        throw AssumptionViolation("interface trace on a tet boundary is not a single closed curve");
    }
  }

  // Near-interface region: closures touching an interface element.
  std::vector<std::vector<int>> vertex_elems(nv);
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i <= N; ++i) vertex_elems[mesh.elements[e][i]].push_back(e);
  cls.elem_near.assign(ne, 0);
  for (int e : cls.interface_elements)
    for (int i = 0; i <= N; ++i)
      for (int e2 : vertex_elems[mesh.elements[e][i]]) cls.elem_near[e2] = 1;
  cls.face_near.assign(nf, 0);
  for (int f = 0; f < nf; ++f) {
    const auto& face = mesh.faces[f];
    if (!face.boundary && cls.elem_near[face.elem[0]] && cls.elem_near[face.elem[1]])
      cls.face_near[f] = 1;
  }
  return cls;
}

// ---------------------------------------------------------------------------
// Interface frame: local linearization plane, tangents, anchor points and
// frozen coefficient matrices.
// ---------------------------------------------------------------------------
template <int N>
struct InterfaceFrame {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  Vec x0_bar = Vec::Zero();
  Vec n_bar = Vec::Zero();
  std::array<Vec, N - 1> t_bar;
  double mu = 0.5;
  double h_T = 0.0;
  std::array<Vec, N> x_bar_pts;    // anchor points on L_T (index 0 is x0_bar)
  std::array<Vec, N> x_tilde_pts;  // mapped points on the interface
  Mat B_plus = Mat::Identity(), B_minus = Mat::Identity();

  double d_L(const Vec& x) const { return (x - x0_bar).dot(n_bar); }
};

// Project x_bar to the interface along n_bar: x_bar + rho*n_bar with the
// smallest |rho| root of phi.
template <int N>
Eigen::Matrix<double, N, 1> map_to_interface(const Eigen::Matrix<double, N, 1>& x_bar,
                                             const Eigen::Matrix<double, N, 1>& n_bar,
                                             const LevelSetProblem<N>& prob, double h_T) {
  using Vec = Eigen::Matrix<double, N, 1>;
  auto f = [&](double s) { return prob.phi(x_bar + s * n_bar); };
  const double f0 = f(0);
  const int K = 64;
  const double step = h_T / K;
  double lo = 0, hi = 0, flo = f0, fhi = f0;
  bool found = false;
  if (f0 == 0.0) return x_bar;
  // scan outward, nearest bracket first
  double prev_p = f0, prev_m = f0;
  for (int k = 1; k <= K && !found; ++k) {
    double sp = k * step, sm = -k * step;
    double fp = f(sp);
    if ((prev_p > 0) != (fp > 0)) {
      lo = (k - 1) * step;
      hi = sp;
      flo = prev_p;
      fhi = fp;
      found = true;
      break;
    }
    prev_p = fp;
    double fm = f(sm);
    if ((prev_m > 0) != (fm > 0)) {
      lo = sm;
      hi = -(k - 1) * step;
      flo = fm;
      fhi = prev_m;
      found = true;
      break;
    }
    prev_m = fm;
  }
  if (!found)
    throw MappingFailure("no interface root within h_T along the frame normal");
  // bisection, then Newton polish
  for (int it = 0; it < 60 && (hi - lo) > 1e-14 * h_T; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((flo > 0) == (fm > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    Vec x = x_bar + s * n_bar;
    double df = prob.grad_phi(x).dot(n_bar);
    if (std::abs(df) < 1e-300) break;
    double ds = prob.phi(x) / df;
    if (std::abs(ds) > step) break;
    s -= ds;
  }
  Vec x = x_bar + s * n_bar;
  if (std::abs(prob.phi(x)) > 1e-10 * h_T * std::max(1.0, prob.grad_phi(x).norm()))
    throw MappingFailure("interface projection did not converge");
  return x;
}

template <int N>
InterfaceFrame<N> build_interface_frame(const Mesh<N>& mesh, int e,
                                        const LevelSetProblem<N>& prob,
                                        const Classification<N>& cls,
                                        const GeometryOptions& opts = {}) {
  using Vec = Eigen::Matrix<double, N, 1>;
  InterfaceFrame<N> fr;
  fr.mu = opts.mu;
  fr.h_T = mesh.element_diameter(e);
  const auto& el = mesh.elements[e];

  // element-boundary crossing points of the interface (zero vertices included)
  std::vector<Vec> pts;
  for (int i = 0; i <= N; ++i) {
    int si = cls.vertex_sign[el[i]];
    if (si == 0) {
      pts.push_back(mesh.vertices[el[i]]);
      continue;
    }
    for (int j = i + 1; j <= N; ++j) {
      int sj = cls.vertex_sign[el[j]];
      if (si * sj < 0) {
        Vec a = mesh.vertices[el[i]], b = mesh.vertices[el[j]];
        double fa = cls.vertex_phi[el[i]];
        double eps = 1e-13 * (b - a).norm();
        while ((b - a).norm() > eps) {
          Vec m = 0.5 * (a + b);
          double fm = prob.phi(m);
          if ((fa > 0) == (fm > 0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        pts.push_back(0.5 * (a + b));
      }
    }
  }
  if (pts.empty()) throw AssumptionViolation("build_interface_frame: element is not cut");
  Vec c = Vec::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());

  // Fit L_T through the crossing points so that it intersects the same faces
  // as the interface (exact chord for N=2, least squares for N=3). Tangent
  // configurations make the tangent plane at a projected point unusable: it
  // can cross faces the interface does not touch.
  bool fitted = false;
  if (pts.size() >= N) {
    Eigen::Matrix<double, Eigen::Dynamic, N> D(pts.size(), N);
    for (size_t k = 0; k < pts.size(); ++k) D.row(k) = (pts[k] - c).transpose();
    Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, N>> svd(D, Eigen::ComputeFullV);
    // crossing points must span the plane; otherwise fall back to the normal fit
    if (svd.singularValues()(N - 2) > 1e-8 * fr.h_T) {
      fr.n_bar = svd.matrixV().col(N - 1);
      fitted = true;
    }
  }
  if (!fitted) {
    // degenerate point set: Newton-project the centroid and use the exact normal
    Vec x = c;
    for (int it = 0; it < 100; ++it) {
      double p = prob.phi(x);
      Vec g = prob.grad_phi(x);
      double g2 = g.squaredNorm();
      if (g2 < 1e-300) throw MappingFailure("vanishing level-set gradient near the interface");
      if (std::abs(p) <= 1e-13 * fr.h_T * std::sqrt(g2)) break;
      x -= (p / g2) * g;
    }
    c = x;
    fr.n_bar = prob.grad_phi(x).normalized();
  }
  if (fr.n_bar.dot(prob.grad_phi(c)) < 0) fr.n_bar = -fr.n_bar;
  fr.x0_bar = c;

  // The plane must separate the vertices the same way the interface does
  // (zero counts as plus on both sides of the comparison). Shift the offset
  // into the admissible window when a vertex ends up on the wrong side.
  {
    double max_minus = -std::numeric_limits<double>::infinity();
    double min_plus = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= N; ++i) {
      double dv = (mesh.vertices[el[i]] - fr.x0_bar).dot(fr.n_bar);
      if (cls.vertex_sign[el[i]] < 0)
        max_minus = std::max(max_minus, dv);
      else
        min_plus = std::min(min_plus, dv);
    }
    if (max_minus >= min_plus)
      throw DegenerateCut("no plane along the fitted normal separates the element vertices");
    // minimal shift: plus vertices may lie on the plane, minus vertices may not
    if (min_plus < 0) {
      fr.x0_bar += min_plus * fr.n_bar;
    } else if (max_minus >= 0) {
      double delta = max_minus + std::min(1e-9 * fr.h_T, 0.5 * (min_plus - max_minus));
      fr.x0_bar += delta * fr.n_bar;
    }
  }
  // Anchor images on the interface: map along the frame normal; if the normal
  // line misses the interface within h_T (possible for fitted normals at
  // skewed cuts), Newton-project instead.
  auto project = [&](Vec x) {
    try {
      return map_to_interface<N>(x, fr.n_bar, prob, fr.h_T);
    } catch (const MappingFailure&) {
      for (int it = 0; it < 100; ++it) {
        double p = prob.phi(x);
        Vec g = prob.grad_phi(x);
        double g2 = g.squaredNorm();
        if (g2 < 1e-300) throw MappingFailure("vanishing level-set gradient near the interface");
        if (std::abs(p) <= 1e-13 * fr.h_T * std::sqrt(g2)) break;
        x -= (p / g2) * g;
      }
      return x;
    }
  };
  fr.x_tilde_pts[0] = project(fr.x0_bar);

  // deterministic tangent frame
  if constexpr (N == 2) {
    fr.t_bar[0] = Vec(-fr.n_bar.y(), fr.n_bar.x());
  } else {
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(fr.n_bar[i]) < std::abs(fr.n_bar[k])) k = i;
    Vec ek = Vec::Zero();
    ek[k] = 1.0;
    fr.t_bar[0] = (ek - fr.n_bar[k] * fr.n_bar).normalized();
    fr.t_bar[1] = fr.n_bar.cross(fr.t_bar[0]);
  }

  fr.x_bar_pts[0] = fr.x0_bar;
  for (int i = 1; i < N; ++i) {
    fr.x_bar_pts[i] = fr.x0_bar + fr.mu * fr.h_T * fr.t_bar[i - 1];
    fr.x_tilde_pts[i] = project(fr.x_bar_pts[i]);
    double dev = (fr.x_tilde_pts[i] - fr.x_bar_pts[i]).norm();
    if (dev > opts.frame_deviation_c * fr.h_T * fr.h_T)
      throw AssumptionViolation("anchor deviation exceeds C*h^2; interface too curved for mu*h");
  }
  fr.B_plus = prob.B_plus(fr.x_tilde_pts[0]);
  fr.B_minus = prob.B_minus(fr.x_tilde_pts[0]);
  return fr;
}

// ---------------------------------------------------------------------------
// Cut element data: exact L_T polytopes, face partition moments, and the
// quadrature rules on the chord-approximated subdomains and interfaces.
// ---------------------------------------------------------------------------
template <int N>
struct FaceCutMoments {
  Eigen::Matrix<double, N, 1> mom_plus = Eigen::Matrix<double, N, 1>::Zero(),
                              mom_minus = Eigen::Matrix<double, N, 1>::Zero();
  double meas_plus = 0, meas_minus = 0;
};

template <int N>
struct CutElementData {
  using Vec = Eigen::Matrix<double, N, 1>;

  int elem = -1;
  double volume = 0, h_T = 0;
  InterfaceFrame<N> frame;

  std::vector<std::array<Vec, N + 1>> plus_polytope, minus_polytope;  // L_T split
  double vol_plus = 0, vol_minus = 0;
  std::array<FaceCutMoments<N>, N + 1> face_moments;  // per local face, L_T split

  PhysRule<N> quad_plus, quad_minus;  // volume rules on the chord subdomains
  PhysRule<N> quad_interface;        // surface rule on the chordal interface
  PhysRule<N> quad_ext;              // surface rule on Gamma_T^ext
  double gamma_ext_measure = 0;

  double avg_gamma_ext(const std::function<double(const Vec&)>& g) const {
    double s = 0;
    for (size_t i = 0; i < quad_ext.pts.size(); ++i) s += quad_ext.wts[i] * g(quad_ext.pts[i]);
    return s / gamma_ext_measure;
  }
};

// Exact clip of the element by the frame plane L_T: sub-polytopes, measures
// and the per-face partition moments (measure and first moment per side).
template <int N>
void cut_element(const Mesh<N>& mesh, int e, const InterfaceFrame<N>& frame,
                 CutElementData<N>& data) {
  using Vec = Eigen::Matrix<double, N, 1>;
  auto verts = mesh.element_vertices(e);
  auto split = split_by_plane<N, N>(verts, frame.x0_bar, frame.n_bar, frame.h_T);
  data.plus_polytope = split.plus;
  data.minus_polytope = split.minus;
  data.vol_plus = data.vol_minus = 0;
  for (const auto& s : split.plus) data.vol_plus += simplex_measure<N, N>(s);
  for (const auto& s : split.minus) data.vol_minus += simplex_measure<N, N>(s);

  for (int i = 0; i <= N; ++i) {
    int f = mesh.element_faces[e][i];
    std::array<Vec, N> fv = mesh.face_vertices(f);
    auto fs = split_by_plane<N, N - 1>(fv, frame.x0_bar, frame.n_bar, frame.h_T);
    FaceCutMoments<N>& fm = data.face_moments[i];
    fm = {};
    for (const auto& piece : fs.plus) {
      double m = simplex_measure<N, N - 1>(piece);
      Vec c = Vec::Zero();
      for (const auto& p : piece) c += p;
      c /= N;
      fm.meas_plus += m;
      fm.mom_plus += m * c;
    }
    for (const auto& piece : fs.minus) {
      double m = simplex_measure<N, N - 1>(piece);
      Vec c = Vec::Zero();
      for (const auto& p : piece) c += p;
      c /= N;
      fm.meas_minus += m;
      fm.mom_minus += m * c;
    }
  }
}

// Volume rules on the chord-approximated subdomains T^+/T^- and the surface
// rule on the chordal interface. A piecewise-linear interface approximation
// is sufficient for linear elements.
template <int N>
void cut_quadrature(const Mesh<N>& mesh, int e, const LevelSetProblem<N>& prob, int volume_order,
                    int interface_order, PhysRule<N>& quad_plus, PhysRule<N>& quad_minus,
                    PhysRule<N>& quad_interface) {
  auto verts = mesh.element_vertices(e);
  auto split = split_by_levelset<N, N>(verts, prob);
  auto vol_rule = simplex_rule<N>(volume_order);
  auto surf_rule = simplex_rule<N - 1>(interface_order);
  quad_plus = {};
  quad_minus = {};
  quad_interface = {};
  const double vol_floor = 1e-14 * mesh.element_volume(e);
  for (const auto& s : split.plus)
    if (simplex_measure<N, N>(s) > vol_floor) map_rule<N, N>(vol_rule, s, quad_plus);
  for (const auto& s : split.minus)
    if (simplex_measure<N, N>(s) > vol_floor) map_rule<N, N>(vol_rule, s, quad_minus);
  for (const auto& fct : split.facets) map_rule<N, N - 1>(surf_rule, fct, quad_interface);
}

// Surface rule on Gamma_T^ext: tensor Gauss nodes on the patch S_T mapped by
// the normal projection, with the surface Jacobian by central differences.
template <int N>
void gamma_ext_quadrature(const InterfaceFrame<N>& frame, const LevelSetProblem<N>& prob, int q,
                          PhysRule<N>& quad_ext, double& measure) {
  using Vec = Eigen::Matrix<double, N, 1>;
  std::vector<double> gp, gw;
  gauss_legendre01(q, gp, gw);
  const double len = frame.mu * frame.h_T;
  const double fd = 1e-5 * frame.h_T;
  auto param_point = [&](double z1, double z2) {
    Vec x = frame.x0_bar + z1 * frame.t_bar[0];
    if constexpr (N == 3) x += z2 * frame.t_bar[N == 3 ? 1 : 0];
    try {
      return map_to_interface<N>(x, frame.n_bar, prob, frame.h_T);
    } catch (const MappingFailure&) {
      for (int it = 0; it < 100; ++it) {
        double p = prob.phi(x);
        Vec g = prob.grad_phi(x);
        double g2 = g.squaredNorm();
        if (g2 < 1e-300) throw MappingFailure("vanishing level-set gradient near the interface");
        if (std::abs(p) <= 1e-13 * frame.h_T * std::sqrt(g2)) break;
        x -= (p / g2) * g;
      }
      return x;
    }
  };
  quad_ext = {};
  measure = 0;
  if constexpr (N == 2) {
    for (int i = 0; i < q; ++i) {
      double z = gp[i] * len;
      Vec p = param_point(z, 0);
      Vec dp = (param_point(z + fd, 0) - param_point(z - fd, 0)) / (2 * fd);
      double w = gw[i] * len * dp.norm();
      quad_ext.pts.push_back(p);
      quad_ext.wts.push_back(w);
      measure += w;
    }
  } else {
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        double z1 = gp[i] * len, z2 = gp[j] * len;
        Vec p = param_point(z1, z2);
        Vec d1 = (param_point(z1 + fd, z2) - param_point(z1 - fd, z2)) / (2 * fd);
        Vec d2 = (param_point(z1, z2 + fd) - param_point(z1, z2 - fd)) / (2 * fd);
        double w = gw[i] * gw[j] * len * len * d1.cross(d2).norm();
        quad_ext.pts.push_back(p);
        quad_ext.wts.push_back(w);
        measure += w;
      }
  }
}

template <int N>
CutElementData<N> build_cut_data(const Mesh<N>& mesh, int e, const LevelSetProblem<N>& prob,
                                 const Classification<N>& cls, const GeometryOptions& opts = {}) {
  CutElementData<N> data;
  data.elem = e;
  data.volume = mesh.element_volume(e);
  data.h_T = mesh.element_diameter(e);
  data.frame = build_interface_frame(mesh, e, prob, cls, opts);
  cut_element(mesh, e, data.frame, data);
  cut_quadrature(mesh, e, prob, opts.volume_order, opts.interface_order, data.quad_plus,
                 data.quad_minus, data.quad_interface);
  gamma_ext_quadrature(data.frame, prob, opts.gamma_ext_points, data.quad_ext,
                       data.gamma_ext_measure);
  return data;
}

// Quadrature on a mesh face split by the interface; each node carries the
// sign of phi so piecewise quantities pick the correct branch.
template <int N>
struct SideRule {
  std::vector<Eigen::Matrix<double, N, 1>> pts;
  std::vector<double> wts;
  std::vector<int> sides;
};

template <int N>
SideRule<N> interface_face_rule(const Mesh<N>& mesh, int f, const LevelSetProblem<N>& prob,
                                int order) {
  SideRule<N> rule;
  auto fv = mesh.face_vertices(f);
  auto split = split_by_levelset<N, N - 1>(fv, prob);
  auto gr = simplex_rule<N - 1>(order);
  auto add = [&](const std::vector<std::array<Eigen::Matrix<double, N, 1>, N>>& pieces,
                 int piece_side) {
    for (const auto& piece : pieces) {
      PhysRule<N> pr;
      map_rule<N, N - 1>(gr, piece, pr);
      for (size_t m = 0; m < pr.pts.size(); ++m) {
        double p = prob.phi(pr.pts[m]);
        int s = (p != 0) ? (p > 0 ? +1 : -1) : piece_side;
        rule.pts.push_back(pr.pts[m]);
        rule.wts.push_back(pr.wts[m]);
        rule.sides.push_back(s);
      }
    }
  };
  add(split.plus, +1);
  add(split.minus, -1);
  return rule;
}

}  // namespace ifem
