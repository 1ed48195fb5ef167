#pragma once

// Rank-N Hermitian projections as points of the Grassmann manifold, tangent
// coordinates B in C^{N x (nu-N)}, the retraction
//     R_P(xi) = (I + xi) Y [I_N + Y* xi* xi Y]^{-1} Y* (I + xi*),
// and its first three directional derivatives in closed form.
//
// Derivatives are evaluated with the direction's zeta and zeta* slots as
// independent arguments.  The normal path passes (zeta, zeta^H); the
// "no-antiholomorphic" (NA) path passes (eta^b, 0), which realizes the
// masking identity  df(xi;eta) + i df(xi;eta_hat) = NA{df(xi;eta^b)}:
// every occurrence of the direction is either zeta Y (kept) or Y* zeta*
// (annihilated).

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hfcert/matnorm.hpp"
#include "hfcert/types.hpp"

namespace hfcert {

struct GrassmannPoint {
  CMat p;           // nu x nu Hermitian idempotent
  Index n_rank;     // N = tr(P)
  CMat basis_y;     // nu x N, orthonormal columns spanning Ran P
  CMat basis_yperp; // nu x (nu-N), orthonormal columns spanning Ker P
  Index dim() const { return p.rows(); }
  Index codim() const { return p.rows() - n_rank; }
};

struct TangentCoord {
  CMat b;  // N x (nu-N); ||xi||_X = norm_one_inf(b)
};

inline double tangent_norm(const TangentCoord& t) { return norm_one_inf(t.b); }

inline std::vector<std::string> point_violations(const GrassmannPoint& pt,
                                                 double tol = 1e-12,
                                                 double trace_tol = 1e-10) {
  std::vector<std::string> out;
  const Index nu = pt.dim(), n = pt.n_rank;
  const CMat& p = pt.p;
  if (p.cols() != nu || pt.basis_y.rows() != nu || pt.basis_y.cols() != n ||
      pt.basis_yperp.rows() != nu || pt.basis_yperp.cols() != nu - n) {
    out.push_back("shape");
    return out;
  }
  if (norm_one_inf((p - p.adjoint()).eval()) > tol) out.push_back("hermitian");
  if (norm_one_inf((p * p - p).eval()) > tol) out.push_back("idempotent");
  if (std::abs(p.trace().real() - double(n)) > trace_tol ||
      std::abs(p.trace().imag()) > trace_tol)
    out.push_back("trace");
  if (norm_one_inf((pt.basis_y * pt.basis_y.adjoint() - p).eval()) > tol)
    out.push_back("ran-basis");
  if (norm_one_inf(
          (pt.basis_yperp * pt.basis_yperp.adjoint() - (CMat::Identity(nu, nu) - p)).eval()) >
      tol)
    out.push_back("ker-basis");
  if (norm_one_inf((pt.basis_y.adjoint() * pt.basis_y - CMat::Identity(n, n)).eval()) > tol ||
      norm_one_inf(
          (pt.basis_yperp.adjoint() * pt.basis_yperp - CMat::Identity(nu - n, nu - n)).eval()) >
          tol)
    out.push_back("orthonormal-columns");
  return out;
}

// P0 = diag(1,...,1,0,...,0) with the standard bases.
inline GrassmannPoint canonical_point(Index n, Index nu) {
  if (n <= 0 || n >= nu) throw InvalidInput("canonical_point: need 0 < N < nu");
  GrassmannPoint pt;
  pt.n_rank = n;
  pt.p = CMat::Zero(nu, nu);
  pt.p.topLeftCorner(n, n).setIdentity();
  const CMat id = CMat::Identity(nu, nu);
  pt.basis_y = id.leftCols(n);
  pt.basis_yperp = id.rightCols(nu - n);
  return pt;
}

// Ingests a raw projection matrix; Ran/Ker split by Hermitian
// eigendecomposition with threshold 0.5.  An eigenvalue at the threshold
// (within tie_tol) cannot belong to a projection and is rejected.
inline GrassmannPoint point_from_projection(const CMat& p, double tie_tol = 1e-6) {
  if (p.rows() != p.cols() || p.rows() < 2) throw InvalidInput("point_from_projection: shape");
  if (!p.allFinite()) throw InvalidInput("point_from_projection: non-finite entry");
  if (norm_one_inf((p - p.adjoint()).eval()) > 1e-10)
    throw InvalidInput("point_from_projection: not Hermitian");
  const Index nu = p.rows();
  Eigen::SelfAdjointEigenSolver<CMat> es(p);
  if (es.info() != Eigen::Success) throw SolverFailure("point_from_projection: eigensolver");
  Index n = 0;
  for (Index i = 0; i < nu; ++i) {
    const double lam = es.eigenvalues()(i);
    if (std::abs(lam - 0.5) <= tie_tol)
      throw InvalidInput("point_from_projection: eigenvalue at the 0.5 split threshold");
    if (lam > 0.5) ++n;
  }
  if (n == 0 || n == nu) throw InvalidInput("point_from_projection: rank must be strictly between 0 and nu");
  GrassmannPoint pt;
  pt.n_rank = n;
  // eigenvalues are ascending: kernel vectors first.
  pt.basis_yperp = es.eigenvectors().leftCols(nu - n);
  pt.basis_y = es.eigenvectors().rightCols(n);
  pt.p = pt.basis_y * pt.basis_y.adjoint();
  const auto bad = point_violations(pt);
  if (!bad.empty())
    throw InvalidInput("point_from_projection: not a projection (" + bad.front() + ")");
  return pt;
}

inline void check_tangent_shape(const GrassmannPoint& pt, const CMat& b, const char* who) {
  if (b.rows() != pt.n_rank || b.cols() != pt.codim())
    throw InvalidInput(std::string(who) + ": tangent coordinate shape mismatch");
  if (!b.allFinite()) throw InvalidInput(std::string(who) + ": non-finite tangent");
}

// zeta^a = Y B Yperp* and zeta^b = Yperp B* Y*; xi = (zeta^a + zeta^b)/2.
inline CMat tangent_part_a(const GrassmannPoint& pt, const CMat& b) {
  check_tangent_shape(pt, b, "tangent_part_a");
  return pt.basis_y * b * pt.basis_yperp.adjoint();
}
inline CMat tangent_part_b(const GrassmannPoint& pt, const CMat& b) {
  check_tangent_shape(pt, b, "tangent_part_b");
  return pt.basis_yperp * b.adjoint() * pt.basis_y.adjoint();
}
inline CMat embed_tangent(const GrassmannPoint& pt, const CMat& b) {
  return 0.5 * (tangent_part_a(pt, b) + tangent_part_b(pt, b));
}

// eta_jk (B = E_jk) and eta_hat_jk (B = i E_jk), row-major over (j,k),
// interleaved so that index 2q is the real member and 2q+1 the imaginary
// one; q = j*(nu-N) + k.
inline std::vector<TangentCoord> basis_vectors(const GrassmannPoint& pt) {
  const Index n = pt.n_rank, m = pt.codim();
  std::vector<TangentCoord> out;
  out.reserve(2 * n * m);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < m; ++k) {
      CMat e = CMat::Zero(n, m);
      e(j, k) = 1.0;
      out.push_back({e});
      e(j, k) = Cplx(0.0, 1.0);
      out.push_back({e});
    }
  return out;
}

// A direction with its conjugate-transpose slot decoupled.
struct DirPair {
  CMat z;   // stands for zeta
  CMat zs;  // stands for zeta*; empty means 0 (NA masking)
  bool masked() const { return zs.size() == 0; }
};

inline DirPair hermitian_dir(const CMat& zeta_embedded) {
  return {zeta_embedded, zeta_embedded.adjoint()};
}

// Shared factors of R_P(xi) and its derivatives: X = (I + xi)Y and
// Z = I_N + Y* xi* xi Y = X*X, Hermitian positive definite.
class RetractionFrame {
 public:
  RetractionFrame(const GrassmannPoint& pt, const CMat& b_xi) : pt_(pt) {
    check_tangent_shape(pt, b_xi, "RetractionFrame");
    xi_ = embed_tangent(pt, b_xi);
    x_ = (CMat::Identity(pt.dim(), pt.dim()) + xi_) * pt.basis_y;
    const CMat z = x_.adjoint() * x_;
    Eigen::LLT<CMat> llt(z);
    if (llt.info() != Eigen::Success)
      throw SolverFailure("retract: Z factorization failed");
    zi_ = llt.solve(CMat::Identity(pt.n_rank, pt.n_rank));
    z_ = z;
  }

  const CMat& xi() const { return xi_; }
  const CMat& x() const { return x_; }
  const CMat& z() const { return z_; }
  const CMat& z_inverse() const { return zi_; }

  CMat projection() const { return x_ * zi_ * x_.adjoint(); }

  // Orthonormal Ran-basis of the retracted projection: X Z^{-1/2}, i.e. the
  // polar factor of X.  Computed from the thin SVD, which stays orthonormal
  // to machine precision even when ||xi|| is huge (forming Z = X*X squares
  // the conditioning).
  CMat y_new() const {
    Eigen::JacobiSVD<CMat> svd(x_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().adjoint();
  }

  CMat d1(const DirPair& c) const {
    const CMat& y = pt_.basis_y;
    CMat out = c.z * y * zi_ * x_.adjoint() - x_ * zi_ * m(c) * zi_ * x_.adjoint();
    if (!c.masked()) out += x_ * zi_ * y.adjoint() * c.zs;
    return out;
  }

  CMat d2(const DirPair& c1, const DirPair& c2) const { return rt(c1, c2) + rt(c2, c1); }

  CMat d3(const DirPair& c1, const DirPair& c2, const DirPair& c3) const {
    return rh(c1, c2, c3) + rh(c1, c3, c2) + rh(c2, c1, c3) + rh(c2, c3, c1) +
           rh(c3, c1, c2) + rh(c3, c2, c1);
  }

 private:
  // Y*(zeta* xi + xi* zeta)Y with xi* = xi.
  CMat m(const DirPair& c) const {
    const CMat& y = pt_.basis_y;
    CMat inner = xi_ * c.z;
    if (!c.masked()) inner += c.zs * xi_;
    return y.adjoint() * inner * y;
  }
  // Y* zeta1* zeta2 Y; zero when slot 1 is masked.
  CMat ss(const DirPair& c1, const DirPair& c2) const {
    const Index n = pt_.n_rank;
    if (c1.masked()) return CMat::Zero(n, n);
    return pt_.basis_y.adjoint() * c1.zs * c2.z * pt_.basis_y;
  }

  CMat rt(const DirPair& c1, const DirPair& c2) const {
    const CMat& y = pt_.basis_y;
    const CMat xs = x_.adjoint();
    CMat out = -c1.z * y * zi_ * m(c2) * zi_ * xs - x_ * zi_ * ss(c1, c2) * zi_ * xs +
               x_ * zi_ * m(c1) * zi_ * m(c2) * zi_ * xs;
    if (!c2.masked()) {
      out += c1.z * y * zi_ * y.adjoint() * c2.zs;
      out -= x_ * zi_ * m(c1) * zi_ * y.adjoint() * c2.zs;
    }
    return out;
  }

  CMat rh(const DirPair& c1, const DirPair& c2, const DirPair& c3) const {
    const CMat& y = pt_.basis_y;
    const CMat xs = x_.adjoint();
    const CMat m2 = m(c2), m3 = m(c3), m1 = m(c1);
    const CMat s23 = ss(c2, c3), s12 = ss(c1, c2);
    CMat out = -c1.z * y * zi_ * s23 * zi_ * xs + c1.z * y * zi_ * m2 * zi_ * m3 * zi_ * xs +
               x_ * zi_ * s12 * zi_ * m3 * zi_ * xs + x_ * zi_ * m1 * zi_ * s23 * zi_ * xs -
               x_ * zi_ * m1 * zi_ * m2 * zi_ * m3 * zi_ * xs;
    if (!c3.masked()) {
      out -= c1.z * y * zi_ * m2 * zi_ * y.adjoint() * c3.zs;
      out -= x_ * zi_ * s12 * zi_ * y.adjoint() * c3.zs;
      out += x_ * zi_ * m1 * zi_ * m2 * zi_ * y.adjoint() * c3.zs;
    }
    return out;
  }

  const GrassmannPoint& pt_;
  CMat xi_, x_, z_, zi_;
};

inline GrassmannPoint retract(const GrassmannPoint& pt, const TangentCoord& xi) {
  const RetractionFrame fr(pt, xi.b);
  GrassmannPoint out;
  out.n_rank = pt.n_rank;
  out.basis_y = fr.y_new();
  out.p = out.basis_y * out.basis_y.adjoint();
  // Complete the unitary: remaining Householder-QR columns span Ker.
  Eigen::HouseholderQR<CMat> qr(out.basis_y);
  const CMat q = qr.householderQ() * CMat::Identity(pt.dim(), pt.dim());
  out.basis_yperp = q.rightCols(pt.codim());
  return out;
}

inline CMat dretract(const GrassmannPoint& pt, const TangentCoord& xi, const TangentCoord& zeta) {
  const RetractionFrame fr(pt, xi.b);
  return fr.d1(hermitian_dir(embed_tangent(pt, zeta.b)));
}

inline CMat d2retract(const GrassmannPoint& pt, const TangentCoord& xi, const TangentCoord& z1,
                      const TangentCoord& z2) {
  const RetractionFrame fr(pt, xi.b);
  return fr.d2(hermitian_dir(embed_tangent(pt, z1.b)), hermitian_dir(embed_tangent(pt, z2.b)));
}

inline CMat d3retract(const GrassmannPoint& pt, const TangentCoord& xi, const TangentCoord& z1,
                      const TangentCoord& z2, const TangentCoord& z3) {
  const RetractionFrame fr(pt, xi.b);
  return fr.d3(hermitian_dir(embed_tangent(pt, z1.b)), hermitian_dir(embed_tangent(pt, z2.b)),
               hermitian_dir(embed_tangent(pt, z3.b)));
}

struct NaResult {
  Cplx na;        // masked evaluation along eta_jk^b
  Cplx identity;  // df(xi;eta_jk) + i df(xi;eta_hat_jk)
};

// evaluator: a complex-linear functional A -> df(A) giving the directional
// derivative of the scalar function at R_P(xi) for ambient perturbation A
// (e.g. A -> tr(D A)).  Both sides of the masking identity are evaluated
// and must agree.
inline NaResult na_directional(const GrassmannPoint& pt, const TangentCoord& xi,
                               const std::function<Cplx(const CMat&)>& evaluator, Index j,
                               Index k, double tol = 1e-9) {
  if (j < 0 || j >= pt.n_rank || k < 0 || k >= pt.codim())
    throw InvalidInput("na_directional: basis index out of range");
  const RetractionFrame fr(pt, xi.b);
  CMat e = CMat::Zero(pt.n_rank, pt.codim());
  e(j, k) = 1.0;
  const DirPair masked{tangent_part_b(pt, e), CMat()};
  NaResult r;
  r.na = evaluator(fr.d1(masked));
  const Cplx d_re = evaluator(fr.d1(hermitian_dir(embed_tangent(pt, e))));
  e(j, k) = Cplx(0.0, 1.0);
  const Cplx d_im = evaluator(fr.d1(hermitian_dir(embed_tangent(pt, e))));
  r.identity = d_re + Cplx(0.0, 1.0) * d_im;
  if (std::abs(r.na - r.identity) > tol * std::max(1.0, std::abs(r.na)))
    throw ConsistencyError("na_directional: masked and identity paths disagree");
  return r;
}

// Smallest singular value of dR_P(xi) as a real-linear map from tangent
// coordinates into the ambient Hermitian matrices.  Image coordinates are
// the mixed block 2 Y* A Yperp (exactly the B-coordinates, so the map is
// the identity at xi = 0) together with the realified Y*AY and Yperp*AYperp
// blocks, which vanish at xi = 0.
inline double differential_injectivity(const GrassmannPoint& pt, const TangentCoord& xi) {
  const RetractionFrame fr(pt, xi.b);
  const Index n = pt.n_rank, m = pt.codim();
  const Index cols = 2 * n * m;
  const Index rows = 2 * n * m + 2 * n * n + 2 * m * m;
  RMat mat(rows, cols);
  const auto basis = basis_vectors(pt);
  for (Index q = 0; q < cols; ++q) {
    const CMat d = fr.d1(hermitian_dir(embed_tangent(pt, basis[static_cast<size_t>(q)].b)));
    const CMat mixed = 2.0 * pt.basis_y.adjoint() * d * pt.basis_yperp;
    const CMat occ = pt.basis_y.adjoint() * d * pt.basis_y;
    const CMat vir = pt.basis_yperp.adjoint() * d * pt.basis_yperp;
    Index r = 0;
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < m; ++b) {
        mat(r++, q) = mixed(a, b).real();
        mat(r++, q) = mixed(a, b).imag();
      }
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b) {
        mat(r++, q) = occ(a, b).real();
        mat(r++, q) = occ(a, b).imag();
      }
    for (Index a = 0; a < m; ++a)
      for (Index b = 0; b < m; ++b) {
        mat(r++, q) = vir(a, b).real();
        mat(r++, q) = vir(a, b).imag();
      }
  }
  Eigen::JacobiSVD<RMat> svd(mat);
  return svd.singularValues().minCoeff();
}

}  // namespace hfcert
