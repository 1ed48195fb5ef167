#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hfcert/grassmann.hpp"
#include "testutil.hpp"

using namespace hfcert;
using testutil::Rng;

namespace {

GrassmannPoint random_point(Rng& rng, Index n, Index nu) {
  // Random orthonormal frame via QR of a random complex matrix.
  CMat g = rng.cmat(nu, nu, 1.0);
  Eigen::HouseholderQR<CMat> qr(g);
  const CMat q = qr.householderQ() * CMat::Identity(nu, nu);
  GrassmannPoint pt;
  pt.n_rank = n;
  pt.basis_y = q.leftCols(n);
  pt.basis_yperp = q.rightCols(nu - n);
  pt.p = pt.basis_y * pt.basis_y.adjoint();
  return pt;
}

double rel_err(const CMat& got, const CMat& want) {
  return norm_one_inf((got - want).eval()) / std::max(1.0, norm_one_inf(want));
}

CMat proj_at(const GrassmannPoint& pt, const CMat& b) {
  return RetractionFrame(pt, b).projection();
}

}  // namespace

TEST_CASE("canonical point and invariants") {
  const auto pt = canonical_point(2, 5);
  REQUIRE(point_violations(pt).empty());
  REQUIRE(pt.n_rank == 2);
  REQUIRE(pt.dim() == 5);
  REQUIRE(pt.codim() == 3);
  REQUIRE_THROWS_AS(canonical_point(0, 3), InvalidInput);
  REQUIRE_THROWS_AS(canonical_point(3, 3), InvalidInput);
}

TEST_CASE("embedding of tangent coordinates") {
  const auto pt = canonical_point(1, 2);
  CMat b(1, 1);
  const Cplx z(0.3, -1.1);
  b(0, 0) = z;
  const CMat xi = embed_tangent(pt, b);
  REQUIRE(std::abs(xi(0, 0)) < 1e-15);
  REQUIRE(std::abs(xi(1, 1)) < 1e-15);
  REQUIRE(std::abs(xi(0, 1) - 0.5 * z) < 1e-15);
  REQUIRE(std::abs(xi(1, 0) - 0.5 * std::conj(z)) < 1e-15);

  Rng rng(11);
  for (int it = 0; it < 20; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4), n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto p2 = random_point(rng, n, nu);
    const CMat bb = rng.cmat(n, nu - n, 2.0);
    const CMat e = embed_tangent(p2, bb);
    // Hermitian and anchored: e = eP + Pe, Y*eY = 0, Yperp*eYperp = 0.
    REQUIRE(norm_one_inf((e - e.adjoint()).eval()) < 1e-13 * (1 + norm_one_inf(e)));
    REQUIRE(norm_one_inf((e - e * p2.p - p2.p * e).eval()) < 1e-12 * (1 + norm_one_inf(e)));
    REQUIRE(norm_one_inf((p2.basis_y.adjoint() * e * p2.basis_y).eval()) < 1e-12);
    // Coordinates round-trip: 2 Y* e Yperp = B.
    REQUIRE(norm_one_inf((2.0 * p2.basis_y.adjoint() * e * p2.basis_yperp - bb).eval()) < 1e-12 * (1 + norm_one_inf(bb)));
  }
}

TEST_CASE("pinned retraction values at nu=2") {
  const auto pt = canonical_point(1, 2);
  CMat b(1, 1);

  b(0, 0) = 2.0;
  CMat want(2, 2);
  want << 0.5, 0.5, 0.5, 0.5;
  REQUIRE(norm_one_inf((retract(pt, {b}).p - want).eval()) < 1e-12);

  b(0, 0) = Cplx(0.0, 2.0);
  want(0, 0) = 0.5;
  want(0, 1) = Cplx(0.0, 0.5);
  want(1, 0) = Cplx(0.0, -0.5);
  want(1, 1) = 0.5;
  REQUIRE(norm_one_inf((retract(pt, {b}).p - want).eval()) < 1e-12);
}

TEST_CASE("retraction lands on the manifold, including far from the center") {
  Rng rng(22);
  for (double scale : {0.5, 3.0, 1e3, 1e6}) {
    for (int it = 0; it < 8; ++it) {
      const Index nu = 2 + Index(rng.uniform() * 4);
      const Index n = 1 + Index(rng.uniform() * double(nu - 1));
      const auto pt = random_point(rng, n, nu);
      const CMat b = rng.cmat(n, nu - n, scale);
      const auto out = retract(pt, {b});
      CAPTURE(scale, nu, n);
      REQUIRE(point_violations(out).empty());
      REQUIRE(out.n_rank == n);
    }
  }
}

TEST_CASE("retraction is invariant under basis rotations") {
  Rng rng(33);
  for (int it = 0; it < 15; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto pt = random_point(rng, n, nu);
    // Rotate both bases by unitaries; same projection, transformed coords.
    Eigen::HouseholderQR<CMat> qu(rng.cmat(n, n, 1.0));
    Eigen::HouseholderQR<CMat> qv(rng.cmat(nu - n, nu - n, 1.0));
    const CMat u = qu.householderQ() * CMat::Identity(n, n);
    const CMat v = qv.householderQ() * CMat::Identity(nu - n, nu - n);
    GrassmannPoint pt2 = pt;
    pt2.basis_y = pt.basis_y * u;
    pt2.basis_yperp = pt.basis_yperp * v;
    REQUIRE(point_violations(pt2).empty());

    const CMat b = rng.cmat(n, nu - n, 1.5);
    const CMat b2 = u.adjoint() * b * v;
    REQUIRE(norm_one_inf((retract(pt, {b}).p - retract(pt2, {b2}).p).eval()) < 1e-10);
  }
}

TEST_CASE("projection ingestion") {
  Rng rng(44);
  SECTION("round trip through a retracted point") {
    const auto pt = random_point(rng, 2, 5);
    const auto moved = retract(pt, {rng.cmat(2, 3, 2.0)});
    const auto back = point_from_projection(moved.p);
    REQUIRE(back.n_rank == 2);
    REQUIRE(norm_one_inf((back.p - moved.p).eval()) < 1e-10);
    REQUIRE(point_violations(back).empty());
  }
  SECTION("eigenvalue at the split threshold is rejected") {
    CMat half = CMat::Zero(3, 3);
    half(0, 0) = 1.0;
    half(1, 1) = 0.5;
    REQUIRE_THROWS_AS(point_from_projection(half), InvalidInput);
  }
  SECTION("non-Hermitian input is rejected") {
    CMat bad = CMat::Zero(2, 2);
    bad(0, 1) = 1.0;
    REQUIRE_THROWS_AS(point_from_projection(bad), InvalidInput);
  }
  SECTION("trivial rank is rejected") {
    REQUIRE_THROWS_AS(point_from_projection(CMat::Identity(3, 3)), InvalidInput);
    REQUIRE_THROWS_AS(point_from_projection(CMat::Zero(3, 3).eval()), InvalidInput);
  }
}

TEST_CASE("first derivative at the center is the embedded direction") {
  Rng rng(55);
  for (int it = 0; it < 20; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto pt = random_point(rng, n, nu);
    const CMat zero = CMat::Zero(n, nu - n);
    const CMat b = rng.cmat(n, nu - n, 2.0);
    const CMat got = dretract(pt, {zero}, {b});
    REQUIRE(rel_err(got, embed_tangent(pt, b)) < 1e-12);
  }
}

TEST_CASE("second derivative at the center matches its closed form") {
  Rng rng(66);
  for (int it = 0; it < 20; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto pt = random_point(rng, n, nu);
    const CMat zero = CMat::Zero(n, nu - n);
    const CMat z1 = embed_tangent(pt, rng.cmat(n, nu - n, 1.5));
    const CMat z2 = embed_tangent(pt, rng.cmat(n, nu - n, 1.5));
    const CMat want = z1 * pt.p * z2.adjoint() + z2 * pt.p * z1.adjoint() -
                      pt.p * z1.adjoint() * z2 * pt.p - pt.p * z2.adjoint() * z1 * pt.p;
    const RetractionFrame fr(pt, zero);
    const CMat got = fr.d2(hermitian_dir(z1), hermitian_dir(z2));
    REQUIRE(rel_err(got, want) < 1e-12);
  }
}

TEST_CASE("paired real/imaginary basis directions annihilate the second derivative at the center") {
  Rng rng(77);
  for (int it = 0; it < 6; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto pt = random_point(rng, n, nu);
    const CMat zero = CMat::Zero(n, nu - n);
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < nu - n; ++k) {
        CMat e = CMat::Zero(n, nu - n);
        e(j, k) = 1.0;
        CMat ehat = CMat::Zero(n, nu - n);
        ehat(j, k) = Cplx(0.0, 1.0);
        REQUIRE(norm_one_inf(d2retract(pt, {zero}, {e}, {ehat})) < 1e-12);
      }
  }
}

TEST_CASE("finite differences confirm the first derivative") {
  Rng rng(101);
  const double h = 1e-4;
  for (int it = 0; it < 40; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto pt = random_point(rng, n, nu);
    const CMat xi = rng.cmat(n, nu - n, 1.2);
    const CMat z = rng.cmat(n, nu - n, 1.0);
    const CMat fd = (proj_at(pt, xi + h * z) - proj_at(pt, (xi - h * z).eval())) / (2 * h);
    const CMat got = dretract(pt, {xi}, {z});
    CAPTURE(nu, n, it);
    REQUIRE(rel_err(fd, got) < 1e-6);
    REQUIRE(norm_one_inf((got - got.adjoint()).eval()) < 1e-11 * (1 + norm_one_inf(got)));
  }
}

TEST_CASE("finite differences confirm the second derivative") {
  Rng rng(102);
  const double h = 1e-4;
  for (int it = 0; it < 40; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto pt = random_point(rng, n, nu);
    const CMat xi = rng.cmat(n, nu - n, 1.2);
    const CMat z = rng.cmat(n, nu - n, 1.0);
    const CMat fd =
        (proj_at(pt, xi + h * z) - 2.0 * proj_at(pt, xi) + proj_at(pt, (xi - h * z).eval())) /
        (h * h);
    const CMat got = d2retract(pt, {xi}, {z}, {z});
    CAPTURE(nu, n, it);
    REQUIRE(rel_err(fd, got) < 1e-4);
    REQUIRE(norm_one_inf((got - got.adjoint()).eval()) < 1e-11 * (1 + norm_one_inf(got)));

    // Mixed directions from polarization of the diagonal.
    const CMat z2 = rng.cmat(n, nu - n, 1.0);
    const CMat mixed = d2retract(pt, {xi}, {z}, {z2});
    const CMat pol = 0.5 * (d2retract(pt, {xi}, {(z + z2).eval()}, {(z + z2).eval()}) -
                            d2retract(pt, {xi}, {z}, {z}) - d2retract(pt, {xi}, {z2}, {z2}));
    REQUIRE(rel_err(pol, mixed) < 1e-11);
  }
}

TEST_CASE("finite differences confirm the third derivative") {
  Rng rng(103);
  const double h = 1e-4;
  for (int it = 0; it < 30; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto pt = random_point(rng, n, nu);
    const CMat xi = rng.cmat(n, nu - n, 1.0);
    const CMat z1 = rng.cmat(n, nu - n, 1.0);
    const CMat z2 = rng.cmat(n, nu - n, 1.0);
    const CMat z3 = rng.cmat(n, nu - n, 1.0);
    const CMat fd = (d2retract(pt, {(xi + h * z3).eval()}, {z1}, {z2}) -
                     d2retract(pt, {(xi - h * z3).eval()}, {z1}, {z2})) /
                    (2 * h);
    const CMat got = d3retract(pt, {xi}, {z1}, {z2}, {z3});
    CAPTURE(nu, n, it);
    REQUIRE(rel_err(fd, got) < 1e-3);
    REQUIRE(norm_one_inf((got - got.adjoint()).eval()) < 1e-10 * (1 + norm_one_inf(got)));
  }
}

TEST_CASE("retraction is first order") {
  Rng rng(104);
  const auto pt = random_point(rng, 2, 4);
  const CMat z = rng.cmat(2, 2, 1.0);
  const CMat ze = embed_tangent(pt, z);
  double prev = -1.0;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const double gap = norm_one_inf(((proj_at(pt, (h * z).eval()) - pt.p) / h - ze).eval());
    REQUIRE(gap < 10 * h * norm_one_inf(z) * norm_one_inf(z));
    if (prev >= 0) REQUIRE(gap < prev);
    prev = gap;
  }
}

TEST_CASE("basis vector ordering") {
  const auto pt = canonical_point(2, 4);
  const auto basis = basis_vectors(pt);
  REQUIRE(basis.size() == 8);
  // q = j*(nu-N) + k; slot 2q is E_jk, slot 2q+1 is iE_jk.
  for (Index j = 0; j < 2; ++j)
    for (Index k = 0; k < 2; ++k) {
      const Index q = j * 2 + k;
      REQUIRE(std::abs(basis[2 * q].b(j, k) - Cplx(1, 0)) < 1e-15);
      REQUIRE(std::abs(basis[2 * q + 1].b(j, k) - Cplx(0, 1)) < 1e-15);
      REQUIRE(basis[2 * q].b.cwiseAbs().sum() == 1.0);
      REQUIRE(basis[2 * q + 1].b.cwiseAbs().sum() == 1.0);
    }
}

TEST_CASE("masked directional derivatives agree with the paired identity") {
  Rng rng(105);
  for (int it = 0; it < 10; ++it) {
    const Index nu = 2 + Index(rng.uniform() * 4);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto pt = random_point(rng, n, nu);
    const CMat xi = rng.cmat(n, nu - n, 0.8);
    const CMat d = rng.cmat(nu, nu, 1.0);
    const auto eval = [&](const CMat& a) { return (d * a).trace(); };
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < nu - n; ++k) {
        const auto r = na_directional(pt, {xi}, eval, j, k);
        REQUIRE(std::abs(r.na - r.identity) <= 1e-9 * std::max(1.0, std::abs(r.na)));
      }
  }
}

TEST_CASE("masked derivative at the center extracts the mixed block") {
  Rng rng(106);
  const Index n = 2, nu = 5;
  const auto pt = random_point(rng, n, nu);
  const CMat zero = CMat::Zero(n, nu - n);
  const CMat d = rng.cmat(nu, nu, 1.0);
  const auto eval = [&](const CMat& a) { return (d * a).trace(); };
  // tr(D . d1(0; eta_jk^b masked)) = tr(D Yperp E_jk^T Y*) = (Y* D Yperp)_{jk}.
  const CMat block = pt.basis_y.adjoint() * d * pt.basis_yperp;
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < nu - n; ++k) {
      const auto r = na_directional(pt, {zero}, eval, j, k);
      REQUIRE(std::abs(r.na - block(j, k)) < 1e-12 * std::max(1.0, std::abs(block(j, k))));
    }
}

TEST_CASE("a non-linear functional trips the consistency check") {
  Rng rng(107);
  const auto pt = random_point(rng, 2, 4);
  const CMat xi = rng.cmat(2, 2, 0.7);
  const CMat d = rng.cmat(4, 4, 1.0);
  // Antilinear in its argument, so the two evaluation paths cannot agree.
  const auto bad = [&](const CMat& a) { return (d * a.adjoint()).trace(); };
  REQUIRE_THROWS_AS(na_directional(pt, {xi}, bad, 0, 0), ConsistencyError);
}

TEST_CASE("differential injectivity measure") {
  Rng rng(108);
  SECTION("exactly one at the center") {
    for (auto [n, nu] : {std::pair<Index, Index>{1, 2}, {2, 4}, {2, 5}, {3, 5}}) {
      const auto pt = canonical_point(n, nu);
      const CMat zero = CMat::Zero(n, nu - n);
      REQUIRE(std::abs(differential_injectivity(pt, {zero}) - 1.0) < 1e-12);
    }
    const auto pt = random_point(rng, 2, 5);
    REQUIRE(std::abs(differential_injectivity(pt, {CMat::Zero(2, 3).eval()}) - 1.0) < 1e-10);
  }
  SECTION("positive over moderate coordinates") {
    for (int it = 0; it < 12; ++it) {
      const Index nu = 2 + Index(rng.uniform() * 3);
      const Index n = 1 + Index(rng.uniform() * double(nu - 1));
      const auto pt = random_point(rng, n, nu);
      CMat b = rng.cmat(n, nu - n, 1.0);
      const double nb = norm_one_inf(b);
      if (nb > 10.0) b *= 10.0 / nb;
      REQUIRE(differential_injectivity(pt, {b}) > 1e-8);
    }
  }
  SECTION("positive even where the mixed block degenerates") {
    // At B = 2 the mixed-block coordinate of the derivative along B vanishes,
    // but the ambient differential does not.
    const auto pt = canonical_point(1, 2);
    CMat b(1, 1);
    b(0, 0) = 2.0;
    REQUIRE(differential_injectivity(pt, {b}) > 1e-3);
  }
}

TEST_CASE("tangent norm and shape checks") {
  const auto pt = canonical_point(2, 4);
  CMat b = CMat::Zero(2, 2);
  b(0, 0) = Cplx(3, 4);
  b(0, 1) = 1.0;
  REQUIRE(tangent_norm({b}) == 6.0);
  REQUIRE_THROWS_AS(embed_tangent(pt, CMat::Zero(3, 2)), InvalidInput);
  CMat nan = CMat::Zero(2, 2);
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(embed_tangent(pt, nan), InvalidInput);
}
