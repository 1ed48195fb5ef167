#pragma once

// The discretized energy functional
//   E(P) = sum h_{kj} p_{jk} + 1/2 sum p_{jk} p_{lm} ([kj|ml] - [kl|mj]),
// its effective one-particle (Fock) matrix, and the gradient/Hessian of the
// pullback E(R_{P0}(xi)) through the retraction.
//
// E is quadratic in P: the two-electron field G(A) below is linear in A,
// F(P) = h + G(P), dE(P;A) = tr(F(P)A), d2E(A,B) = tr(G(A)B) is a constant
// symmetric bilinear form, and d3E = 0.  The pullback derivatives are
// assembled by the chain rule from the retraction derivatives.

#include <cmath>
#include <string>
#include <vector>

#include "hfcert/grassmann.hpp"
#include "hfcert/integrals.hpp"
#include "hfcert/matnorm.hpp"
#include "hfcert/types.hpp"

namespace hfcert {

struct EnergyBreakdown {
  double total = 0;
  double t_part = 0;  // kinetic contribution
  double v_part = 0;  // nuclear attraction contribution (enters with -)
  double g_tilde = 0; // direct two-electron term
  double g_hat = 0;   // exchange two-electron term
};

namespace detail {

// Physically real scalar: discard roundoff imaginary residue, warn when it
// is suspicious, fail when it indicates corrupted data.
inline double real_checked(Cplx z, const char* what) {
  const double im = std::abs(z.imag());
  if (im > 1e-6)
    throw ConsistencyError(std::string(what) + ": imaginary residue " + std::to_string(im));
  if (im > 1e-10) warn(std::string(what) + ": imaginary residue " + std::to_string(im));
  return z.real();
}

}  // namespace detail

// G(A)_{kj} = sum_{lm} A_{lm} ([kj|ml] - [kl|mj]); linear in A, Hermitian
// for Hermitian A.
inline CMat two_electron_field(const IntegralSet& is, const CMat& a) {
  const Index nu = is.nu;
  if (a.rows() != nu || a.cols() != nu) throw InvalidInput("two_electron_field: shape");
  CMat g = CMat::Zero(nu, nu);
  for (Index k = 0; k < nu; ++k)
    for (Index j = 0; j < nu; ++j) {
      Cplx acc(0, 0);
      for (Index l = 0; l < nu; ++l)
        for (Index m = 0; m < nu; ++m)
          acc += a(l, m) * (is.eri_at(k, j, m, l) - is.eri_at(k, l, m, j));
      g(k, j) = acc;
    }
  return g;
}

inline CMat fock_matrix(const CMat& p, const IntegralSet& is) {
  if (p.rows() != is.nu || p.cols() != is.nu) throw InvalidInput("fock_matrix: shape");
  return is.h + two_electron_field(is, p);
}

inline CMat fock_matrix(const GrassmannPoint& pt, const IntegralSet& is) {
  return fock_matrix(pt.p, is);
}

inline EnergyBreakdown energy(const CMat& p, const IntegralSet& is) {
  const Index nu = is.nu;
  if (p.rows() != nu || p.cols() != nu) throw InvalidInput("energy: shape");
  EnergyBreakdown e;
  e.t_part = detail::real_checked((is.kinetic * p).trace(), "energy kinetic term");
  Cplx v(0, 0);
  for (const CMat& a : is.attraction) v -= (a * p).trace();
  e.v_part = detail::real_checked(v, "energy attraction term");
  // Split G into direct and exchange pieces.
  CMat j_dir = CMat::Zero(nu, nu), k_exc = CMat::Zero(nu, nu);
  for (Index k = 0; k < nu; ++k)
    for (Index j = 0; j < nu; ++j) {
      Cplx dj(0, 0), dk(0, 0);
      for (Index l = 0; l < nu; ++l)
        for (Index m = 0; m < nu; ++m) {
          dj += p(l, m) * is.eri_at(k, j, m, l);
          dk += p(l, m) * is.eri_at(k, l, m, j);
        }
      j_dir(k, j) = dj;
      k_exc(k, j) = dk;
    }
  e.g_tilde = detail::real_checked(0.5 * (j_dir * p).trace(), "energy direct term");
  e.g_hat = detail::real_checked(-0.5 * (k_exc * p).trace(), "energy exchange term");
  e.total = e.t_part + e.v_part + e.g_tilde + e.g_hat;
  return e;
}

inline EnergyBreakdown energy(const GrassmannPoint& pt, const IntegralSet& is) {
  return energy(pt.p, is);
}

// Pullback gradient at xi: the complex N x (nu-N) matrix whose (j,k)
// component is d(E o R)(xi; eta_jk) + i d(E o R)(xi; eta_hat_jk).  Via the
// masked evaluation this collapses to
//   grad = Z^{-1} X* F(R) (Yperp - (1/2) X Z^{-1} B),
// since tr(F d1(eta^b_jk masked)) picks out one entry of that matrix.
inline TangentCoord gradient(const TangentCoord& xi, const IntegralSet& is,
                             const GrassmannPoint& p0) {
  if (p0.dim() != is.nu || p0.n_rank != is.n_elec)
    throw InvalidInput("gradient: point does not match integral dimensions");
  const RetractionFrame fr(p0, xi.b);
  const CMat f_r = fock_matrix(fr.projection(), is);
  const CMat zx = fr.z_inverse() * fr.x().adjoint();
  return {zx * f_r * (p0.basis_yperp - 0.5 * fr.x() * fr.z_inverse() * xi.b)};
}

namespace detail {

// Rows of the Hessian action: component (j,k) of
//   d2(E o R)(xi; eta-pair_jk, zeta)
// evaluated with the eta slot masked, so real/imaginary sit in one complex
// number.  f_r is the Fock matrix of the retracted projection.
inline CMat hessian_apply_core(const RetractionFrame& fr, const CMat& f_r,
                               const IntegralSet& is, const GrassmannPoint& p0,
                               const CMat& zeta_b) {
  const DirPair zp = hermitian_dir(embed_tangent(p0, zeta_b));
  const CMat dz = fr.d1(zp);
  const CMat g_dz = two_electron_field(is, dz);  // d2E(., dz) as a functional
  const Index n = p0.n_rank, m = p0.codim();
  CMat out(n, m);
  CMat e = CMat::Zero(n, m);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < m; ++k) {
      e(j, k) = 1.0;
      const DirPair masked{tangent_part_b(p0, e), CMat()};
      e(j, k) = 0.0;
      out(j, k) = (g_dz * fr.d1(masked)).trace() + (f_r * fr.d2(masked, zp)).trace();
    }
  return out;
}

}  // namespace detail

inline TangentCoord hessian_apply(const TangentCoord& xi, const TangentCoord& zeta,
                                  const IntegralSet& is, const GrassmannPoint& p0) {
  if (p0.dim() != is.nu || p0.n_rank != is.n_elec)
    throw InvalidInput("hessian_apply: point does not match integral dimensions");
  const RetractionFrame fr(p0, xi.b);
  const CMat f_r = fock_matrix(fr.projection(), is);
  return {detail::hessian_apply_core(fr, f_r, is, p0, zeta.b)};
}

// Realified Hessian of the pullback: square of dimension 2N(nu-N), ordered
// like basis_vectors (even rows/columns are eta components, odd ones
// eta_hat).  Column q is hessian_apply along the q-th basis vector.
inline RMat hessian_matrix(const TangentCoord& xi, const IntegralSet& is,
                           const GrassmannPoint& p0) {
  if (p0.dim() != is.nu || p0.n_rank != is.n_elec)
    throw InvalidInput("hessian_matrix: point does not match integral dimensions");
  const RetractionFrame fr(p0, xi.b);
  const CMat f_r = fock_matrix(fr.projection(), is);
  const Index n = p0.n_rank, m = p0.codim();
  const auto basis = basis_vectors(p0);
  RMat h(2 * n * m, 2 * n * m);
  for (size_t q = 0; q < basis.size(); ++q) {
    const CMat col = detail::hessian_apply_core(fr, f_r, is, p0, basis[q].b);
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < m; ++k) {
        const Index row = 2 * (j * m + k);
        h(row, Index(q)) = col(j, k).real();
        h(row + 1, Index(q)) = col(j, k).imag();
      }
  }
  return h;
}

inline double population(const GrassmannPoint& pt, const std::vector<Index>& subset) {
  double acc = 0;
  for (Index j : subset) {
    if (j < 0 || j >= pt.dim()) throw InvalidInput("population: index out of range");
    acc += pt.p(j, j).real();
  }
  return acc;
}

inline double commutator_residual(const GrassmannPoint& pt, const IntegralSet& is) {
  const CMat f = fock_matrix(pt.p, is);
  return norm_one_inf((f * pt.p - pt.p * f).eval());
}

}  // namespace hfcert
