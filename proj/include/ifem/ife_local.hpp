#pragma once

#include <Eigen/Dense>
#include <array>

#include "ifem/affine.hpp"
#include "ifem/geometry.hpp"
#include "ifem/mesh.hpp"

namespace ifem {

// Nonconforming (face-average) linear basis on a simplex: lambda_i has mean 1
// on the face opposite vertex i and mean 0 on the others.
template <int N>
std::array<AffineFn<N>, N + 1> cr_basis(const Mesh<N>& mesh, int e) {
  using Vec = Eigen::Matrix<double, N, 1>;
  auto v = mesh.element_vertices(e);
  Vec c = Vec::Zero();
  for (const auto& p : v) c += p;
  c /= (N + 1);
  Eigen::Matrix<double, N, N> J;
  for (int k = 0; k < N; ++k) J.col(k) = v[k + 1] - v[0];
  Eigen::Matrix<double, N, N> Jinv = J.inverse();
  std::array<AffineFn<N>, N + 1> lam;
  Vec grad0 = Vec::Zero();
  for (int i = 1; i <= N; ++i) {
    Vec gb = Jinv.row(i - 1).transpose();  // gradient of barycentric i
    lam[i] = {c, 1.0 - N * (1.0 / (N + 1)), -double(N) * gb};
    grad0 -= gb;
  }
  lam[0] = {c, 1.0 - N * (1.0 / (N + 1)), -double(N) * grad0};
  return lam;
}

// Face-average functional over the split face: mean of v+ on the plus part
// and v- on the minus part.
template <int N>
double functional_M(const AffinePair<N>& v, const FaceCutMoments<N>& fm) {
  double total = fm.meas_plus + fm.meas_minus;
  double s = 0;
  s += fm.meas_plus * v.plus.value +
       v.plus.gradient.dot(fm.mom_plus - fm.meas_plus * v.plus.anchor);
  s += fm.meas_minus * v.minus.value +
       v.minus.gradient.dot(fm.mom_minus - fm.meas_minus * v.minus.anchor);
  return s / total;
}

// Jump functionals at the frame anchors: value jumps at the on-plane points
// for i < N, the (frozen-coefficient) flux jump for i = N.
template <int N>
double functional_J(int i, const InterfaceFrame<N>& fr, const AffinePair<N>& v) {
  if (i < N) {
    const auto& x = fr.x_bar_pts[i];
    return v.plus(x) - v.minus(x);
  }
  return fr.n_bar.dot(fr.B_plus * v.plus.gradient) -
         fr.n_bar.dot(fr.B_minus * v.minus.gradient);
}

// c_T = theta (nBn- / nBn+ - 1) + 1 with theta = |T+|/|T|; bounded below by
// min(1, beta-_min / beta+_max), so the basis construction never degenerates.
template <int N>
double compute_cT(const InterfaceFrame<N>& fr, double vol_plus, double volume) {
  double nBp = fr.n_bar.dot(fr.B_plus * fr.n_bar);
  double nBm = fr.n_bar.dot(fr.B_minus * fr.n_bar);
  double theta = vol_plus / volume;
  return theta * (nBm / nBp - 1.0) + 1.0;
}

template <int N>
struct IfeLocal {
  std::array<AffinePair<N>, N + 1> basis;  // immersed basis, one per local face
  AffinePair<N> phi_J;                     // elementary jump function
  double c_T = 1.0;
  std::array<double, N + 1> alpha{};
};

// Nonconforming interpolant from prescribed face averages.
template <int N>
AffineFn<N> hat_projection(const std::array<AffineFn<N>, N + 1>& lam,
                           const std::array<double, N + 1>& face_avgs) {
  AffineFn<N> out = lam[0];
  out *= face_avgs[0];
  for (int i = 1; i <= N; ++i) out += face_avgs[i] * lam[i];
  return out;
}

// Explicit immersed basis: phi_F = (lambda_F, lambda_F) + alpha_F * phi_J with
//   phi_J+ = d_L - Pi(chi+ d_L),  phi_J- = -Pi(chi+ d_L),
// where Pi is the face-average interpolant and d_L the signed distance to the
// frame plane. phi_J has zero face averages and zero value jump on the plane;
// its flux jump equals (n'B+n) c_T.
template <int N>
IfeLocal<N> build_ife_basis(const Mesh<N>& mesh, int e, const CutElementData<N>& data) {
  using Vec = Eigen::Matrix<double, N, 1>;
  const InterfaceFrame<N>& fr = data.frame;
  auto lam = cr_basis(mesh, e);
  Vec c = lam[0].anchor;

  AffineFn<N> d_L{c, fr.d_L(c), fr.n_bar};
  std::array<double, N + 1> avgs;
  for (int i = 0; i <= N; ++i) {
    const auto& fm = data.face_moments[i];
    double total = fm.meas_plus + fm.meas_minus;
    double s = fm.meas_plus * d_L.value + d_L.gradient.dot(fm.mom_plus - fm.meas_plus * c);
    avgs[i] = s / total;
  }
  AffineFn<N> pi = hat_projection(lam, avgs);

  IfeLocal<N> out;
  out.phi_J.plus = d_L - pi;
  out.phi_J.minus = AffineFn<N>{c, 0.0, Vec::Zero()} - pi;
  out.c_T = compute_cT(fr, data.vol_plus, data.volume);
  double nBp = fr.n_bar.dot(fr.B_plus * fr.n_bar);
  for (int i = 0; i <= N; ++i) {
    out.alpha[i] =
        -fr.n_bar.dot((fr.B_plus - fr.B_minus) * lam[i].gradient) / (nBp * out.c_T);
    out.basis[i] = AffinePair<N>::continuous(lam[i]) + out.alpha[i] * out.phi_J;
  }
  return out;
}

// Gradient-space coefficients for the lifting operators: the local space of
// immersed gradients is spanned by (e_k + alpha_k n, e_k) with a continuous
// frozen-coefficient normal flux across the frame plane.
template <int N>
Eigen::Matrix<double, N, 1> grad_space_alpha(const InterfaceFrame<N>& fr) {
  double nBp = fr.n_bar.dot(fr.B_plus * fr.n_bar);
  return ((fr.B_minus - fr.B_plus).transpose() * fr.n_bar) / nBp;
}

template <int N>
struct Correction {
  std::array<AffinePair<N>, N + 1> psi;  // dual to the jump functionals
  AffinePair<N> xi;                      // local lift of the prescribed jumps
};

// Correction functions: omega_i vanish on the minus side; on the plus side
// they realize unit value jumps at the anchors (i < N) or a unit flux jump
// (i = N). Subtracting the immersed interpolant zeroes all face averages
// while the jump functionals are untouched.
template <int N>
Correction<N> build_correction(const CutElementData<N>& data, const IfeLocal<N>& local,
                               const LevelSetProblem<N>& prob) {
  using Vec = Eigen::Matrix<double, N, 1>;
  const InterfaceFrame<N>& fr = data.frame;
  double nBp = fr.n_bar.dot(fr.B_plus * fr.n_bar);
  double muh = fr.mu * fr.h_T;

  Correction<N> out;
  for (int i = 0; i <= N; ++i) {
    double val = (i == 0) ? 1.0 : 0.0;
    Eigen::Matrix<double, N - 1, 1> ts = Eigen::Matrix<double, N - 1, 1>::Zero();
    double sn;
    if (i == N) {
      sn = 1.0 / nBp;
    } else {
      if (i == 0)
        ts.setConstant(-1.0 / muh);
      else
        ts[i - 1] = 1.0 / muh;
      // zero flux jump: the normal slope balances the tangential ones
      double s = 0;
      for (int j = 0; j < N - 1; ++j) s += fr.n_bar.dot(fr.B_plus * fr.t_bar[j]) * ts[j];
      sn = -s / nBp;
    }
    Vec grad = sn * fr.n_bar;
    for (int j = 0; j < N - 1; ++j) grad += ts[j] * fr.t_bar[j];
    AffinePair<N> omega;
    omega.plus = AffineFn<N>{fr.x0_bar, val, grad};
    omega.minus = AffineFn<N>{fr.x0_bar, 0.0, Vec::Zero()};
    AffinePair<N> psi = omega;
    for (int f = 0; f <= N; ++f)
      psi -= functional_M(omega, data.face_moments[f]) * local.basis[f];
    out.psi[i] = psi;
  }

  out.xi.plus = AffineFn<N>{fr.x0_bar, 0.0, Vec::Zero()};
  out.xi.minus = out.xi.plus;
  for (int i = 0; i < N; ++i) out.xi += prob.g_D(fr.x_tilde_pts[i]) * out.psi[i];
  double gn_avg = data.avg_gamma_ext(prob.g_N);
  out.xi += gn_avg * out.psi[N];
  return out;
}

}  // namespace ifem
