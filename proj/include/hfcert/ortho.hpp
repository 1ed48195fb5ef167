#pragma once

// Sequential (Gram-Schmidt) orthonormalization of an almost-orthonormal
// basis, with explicit propagation of every measured hypothesis constant
// through the change of basis.
//
// Input is the Gram matrix g_{kl} = <phi'_k, phi'_l> of the raw orbitals and
// a weight set; eps0 := ||g - I||_{w,1,inf} measures the deviation.  The
// orthonormalized orbitals are
//   phi_j = ||phi~_j||^{-1} phi'_j - sum_{k<j} s_jk phi'_k,
// where phi~_j is phi'_j minus its projection onto the span of the earlier
// orbitals, computed through the leading principal submatrix A_{j-1} of the
// Gram matrix (a fresh Hermitian factorization per step).  The epsilon chain
//   eps1 = eps0/(1-eps0),  eps2 = eps0 (1-eps0)^{-1} (1-eps1)^{-1},  ...
// controls ||phi~_j||, ||S||_{w,1,inf}, and the degradation of all
// measured constants under the transformation.

#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Cholesky>

#include "hfcert/conditions.hpp"
#include "hfcert/integrals.hpp"
#include "hfcert/matnorm.hpp"
#include "hfcert/types.hpp"

namespace hfcert {

struct EpsilonChain {
  double eps1 = 0, eps2 = 0, eps3 = 0, eps4 = 0;
};

inline EpsilonChain epsilon_chain(double eps0) {
  if (!(eps0 >= 0.0) || eps0 >= 0.5)
    throw InvalidInput("epsilon_chain: need 0 <= eps0 < 1/2");
  EpsilonChain ch;
  ch.eps1 = eps0 / (1.0 - eps0);
  const double r = 1.0 / (1.0 - ch.eps1);
  ch.eps2 = eps0 / (1.0 - eps0) * r;
  const double e2 = ch.eps2;
  ch.eps3 = 4.0 * e2 * r * r * r + 6.0 * e2 * e2 * r * r + 4.0 * e2 * e2 * e2 * r +
            e2 * e2 * e2 * e2;
  ch.eps4 = std::max(r * r - 1.0, 1.0 - 1.0 / ((1.0 + ch.eps1) * (1.0 + ch.eps1)));
  return ch;
}

struct OrthoResult {
  CMat c;      // rows express the orthonormal orbitals in the raw basis
  CMat s;      // strictly lower-triangular correction coefficients
  RVec norms;  // ||phi~_j||
  double eps0 = 0;
  double eps1 = 0, eps2 = 0, eps3 = 0, eps4 = 0;
  double s_weighted_norm = 0;
};

inline OrthoResult schmidt(const CMat& gram, const WeightSet& ws) {
  const Index nu = gram.rows();
  if (gram.cols() != nu) throw InvalidInput("schmidt: gram matrix must be square");
  if (ws.dim() != nu) throw InvalidInput("schmidt: weight dimension mismatch");
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  if ((gram - gram.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInput("schmidt: gram matrix is not Hermitian");

  OrthoResult out;
  out.eps0 = norm_weighted((gram - CMat::Identity(nu, nu)).eval(), ws);
  if (out.eps0 >= 1.0)
    throw InvalidInput("schmidt: ||gram - I||_{w,1,inf} must be below 1");
  if (out.eps0 < 0.5) {
    const auto ch = epsilon_chain(out.eps0);
    out.eps1 = ch.eps1;
    out.eps2 = ch.eps2;
    out.eps3 = ch.eps3;
    out.eps4 = ch.eps4;
  } else {
    // The chain constants blow up past 1/2; the factor itself still exists.
    out.eps1 = out.eps2 = out.eps3 = out.eps4 = std::numeric_limits<double>::quiet_NaN();
    warn("schmidt: eps0 >= 1/2, epsilon chain undefined");
  }

  out.c = CMat::Zero(nu, nu);
  out.s = CMat::Zero(nu, nu);
  out.norms = RVec(nu);
  for (Index j = 0; j < nu; ++j) {
    double nrm2 = gram(j, j).real();
    CVec q;
    if (j > 0) {
      const CMat a = gram.topLeftCorner(j, j);
      const CVec c = gram.block(0, j, j, 1);
      Eigen::LLT<CMat> llt(a);  // fresh factorization of the leading block
      if (llt.info() != Eigen::Success)
        throw InvalidInput("schmidt: leading principal block is not positive definite");
      q = llt.solve(c);
      nrm2 -= (c.adjoint() * q)(0, 0).real();
    }
    if (!(nrm2 > 0))
      throw InvalidInput("schmidt: gram matrix is not positive definite");
    out.norms(j) = std::sqrt(nrm2);
    out.c(j, j) = 1.0 / out.norms(j);
    for (Index k = 0; k < j; ++k) {
      out.s(j, k) = q(k) / out.norms(j);
      out.c(j, k) = -out.s(j, k);
    }
  }
  out.s_weighted_norm = norm_weighted(out.s, ws);
  return out;
}

// Nonnegative comparison matrix alpha = sum_m (A~)^m for the Neumann series
// of the leading-block inverses: |(A_{j-1}^{-1})_{kl}| <= alpha_kl entrywise.
// A~ is the elementwise absolute value of the Gram matrix off the diagonal.
inline RMat neumann_comparison(const CMat& gram, const WeightSet& ws) {
  const Index nu = gram.rows();
  if (ws.dim() != nu) throw InvalidInput("neumann_comparison: weight dimension mismatch");
  RMat atil = gram.cwiseAbs();
  atil.diagonal().setZero();
  RMat total = RMat::Identity(nu, nu);
  RMat pw = RMat::Identity(nu, nu);
  for (int m = 1; m < 10000; ++m) {
    pw = (pw * atil).eval();
    total += pw;
    if (norm_weighted(pw, ws) < 1e-16) break;
  }
  return total;
}

// Degradation of every measured constant under the orthonormalizing change
// of basis with deviation eps0.  The factorization matrices of the input are
// not transformable and stay empty.  Note the gap propagates as a lower
// bound (it shrinks), everything else as an upper bound (they grow).
inline ConditionReport propagate_constants(const ConditionReport& prev, double eps0) {
  const auto ch = epsilon_chain(eps0);
  const double r = 1.0 / (1.0 - ch.eps1);
  const double m4 = r * r * r * r + ch.eps3;
  const double t2 = 2.0 * ch.eps2 * r + ch.eps2 * ch.eps2;
  const double m2 = r * r + t2;
  ConditionReport out;
  out.eps_tilde = prev.eps_tilde * r * r * r * r + ch.eps3 * prev.c_tilde;
  out.c_tilde = m4 * prev.c_tilde;
  out.c_hat = m4 * prev.c_hat;
  out.c_check = m2 * prev.c_check;
  out.c_breve = m2 * prev.c_breve;
  const double tail = t2 * (prev.c_check + prev.c_breve) +
                      2.0 * ch.eps4 * prev.eps_tilde * r * r +
                      ch.eps3 * (prev.c_tilde + prev.c_hat);
  out.eps = r * r * prev.eps + tail;
  out.delta = r * r * prev.delta + tail;
  out.gamma = prev.gamma / ((1.0 + ch.eps1) * (1.0 + ch.eps1)) -
              2.0 * t2 * (prev.c_check + prev.c_breve) -
              2.0 * ch.eps4 * (prev.c_tilde + 2.0 * prev.c_hat) * r * r -
              2.0 * ch.eps3 * (prev.c_tilde + prev.c_hat);
  out.feasibility.eps_tilde_lt_one = out.eps_tilde < 1.0;
  out.feasibility.eps_lt_one = out.eps < 1.0;
  out.feasibility.gamma_positive = out.gamma > 0.0;
  out.feasibility.denominator_positive =
      0.5 * out.gamma - out.delta - 2.0 * out.eps_tilde > 0.0;
  return out;
}

struct PipelineResult {
  OrthoResult ortho;
  IntegralSet integrals;     // re-expressed in the orthonormal basis
  double residual_eps0 = 0;  // ||C g C* - I||_{w,1,inf}
};

inline PipelineResult orthogonalize_pipeline(const IntegralSet& is, const CMat& gram,
                                             const WeightSet& ws) {
  if (gram.rows() != is.nu)
    throw InvalidInput("orthogonalize_pipeline: gram dimension mismatch");
  PipelineResult out;
  out.ortho = schmidt(gram, ws);
  out.integrals = transform_basis(is, out.ortho.c);
  // Overlap is a matrix element like any other: row j of C carries the
  // conjugate on the bra slot, so the new Gram matrix is conj(C) g C^T.
  const CMat post = out.ortho.c.conjugate() * gram * out.ortho.c.transpose();
  out.residual_eps0 = norm_weighted((post - CMat::Identity(is.nu, is.nu)).eval(), ws);
  if (out.residual_eps0 > 1e-10)
    throw ConsistencyError("orthogonalize_pipeline: residual overlap error " +
                           std::to_string(out.residual_eps0));
  return out;
}

}  // namespace hfcert
