#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hfcert/hf.hpp"
#include "testutil.hpp"

using namespace hfcert;
using testutil::Rng;

namespace {

Cplx raw_eri(const IntegralSet& is, Index j, Index k, Index l, Index m) {
  return is.eri[size_t(((j * is.nu + k) * is.nu + l) * is.nu + m)];
}

// Brute-force energy written against raw offsets, independent of the
// library's contraction code.
double oracle_energy(const IntegralSet& is, const CMat& p) {
  Cplx e(0, 0);
  for (Index k = 0; k < is.nu; ++k)
    for (Index j = 0; j < is.nu; ++j) e += is.h(k, j) * p(j, k);
  for (Index j = 0; j < is.nu; ++j)
    for (Index k = 0; k < is.nu; ++k)
      for (Index l = 0; l < is.nu; ++l)
        for (Index m = 0; m < is.nu; ++m)
          e += 0.5 * p(j, k) * p(l, m) * (raw_eri(is, k, j, m, l) - raw_eri(is, k, l, m, j));
  return e.real();
}

IntegralSet bare_set(Index nu, Index n, const CMat& h) {
  IntegralSet is;
  is.nu = nu;
  is.n_elec = n;
  is.h = h;
  is.kinetic = h;
  is.eri.assign(size_t(nu * nu * nu * nu), Cplx(0, 0));
  return is;
}

GrassmannPoint random_point(Rng& rng, Index n, Index nu) {
  Eigen::HouseholderQR<CMat> qr(rng.cmat(nu, nu, 1.0));
  const CMat q = qr.householderQ() * CMat::Identity(nu, nu);
  GrassmannPoint pt;
  pt.n_rank = n;
  pt.basis_y = q.leftCols(n);
  pt.basis_yperp = q.rightCols(nu - n);
  pt.p = pt.basis_y * pt.basis_y.adjoint();
  return pt;
}

RMat realify_gradient(const TangentCoord& g) {
  const Index n = g.b.rows(), m = g.b.cols();
  RMat out(2 * n * m, 1);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < m; ++k) {
      out(2 * (j * m + k), 0) = g.b(j, k).real();
      out(2 * (j * m + k) + 1, 0) = g.b(j, k).imag();
    }
  return out;
}

}  // namespace

TEST_CASE("energy pinned examples") {
  SECTION("self-interaction cancels") {
    CMat h = CMat::Zero(2, 2);
    h(0, 0) = -1.25;
    h(1, 1) = 0.5;
    auto is = bare_set(2, 1, h);
    is.eri_ref(0, 0, 0, 0) = 0.7;  // [11|11] in 1-based notation
    const auto e = energy(canonical_point(1, 2), is);
    REQUIRE(e.total == Catch::Approx(-1.25).epsilon(1e-12));
    REQUIRE(e.total ==
            Catch::Approx(e.t_part + e.v_part + e.g_tilde + e.g_hat).epsilon(1e-12));

    const CMat f = fock_matrix(canonical_point(1, 2), is);
    REQUIRE(std::abs(f(0, 0) - h(0, 0)) < 1e-14);  // J and K cancel
  }
  SECTION("all-zero integrals give zero") {
    const auto is = bare_set(3, 1, CMat::Zero(3, 3));
    REQUIRE(energy(canonical_point(1, 3), is).total == 0.0);
  }
}

TEST_CASE("energy matches the brute-force oracle") {
  Rng rng(70);
  const auto is = generate_synthetic(21, 4, 2, {1.0, 0.02, 1.0}).integrals;
  for (int it = 0; it < 8; ++it) {
    const auto pt = random_point(rng, 2, 4);
    const auto e = energy(pt, is);
    const double want = oracle_energy(is, pt.p);
    REQUIRE(e.total == Catch::Approx(want).epsilon(1e-10));
    REQUIRE(e.total ==
            Catch::Approx(e.t_part + e.v_part + e.g_tilde + e.g_hat).epsilon(1e-12));
  }
}

TEST_CASE("energy is invariant under the basis used to span P") {
  Rng rng(71);
  const auto is = generate_synthetic(22, 5, 2, {1.0, 0.02, 1.0}).integrals;
  const auto pt = random_point(rng, 2, 5);
  GrassmannPoint pt2 = pt;
  Eigen::HouseholderQR<CMat> qr(rng.cmat(2, 2, 1.0));
  pt2.basis_y = pt.basis_y * (qr.householderQ() * CMat::Identity(2, 2));
  REQUIRE(std::abs(energy(pt, is).total - energy(pt2, is).total) < 1e-12);
}

TEST_CASE("energy is invariant under block-unitary basis changes of the integrals") {
  Rng rng(72);
  const auto is = generate_synthetic(23, 5, 2, {1.0, 0.02, 1.0}).integrals;
  Eigen::HouseholderQR<CMat> qu(rng.cmat(2, 2, 1.0));
  Eigen::HouseholderQR<CMat> qv(rng.cmat(3, 3, 1.0));
  CMat c = CMat::Zero(5, 5);
  c.topLeftCorner(2, 2) = qu.householderQ() * CMat::Identity(2, 2);
  c.bottomRightCorner(3, 3) = qv.householderQ() * CMat::Identity(3, 3);
  const auto is2 = transform_basis(is, c);
  const auto p0 = canonical_point(2, 5);
  REQUIRE(std::abs(energy(p0, is).total - energy(p0, is2).total) < 1e-10);
}

TEST_CASE("imaginary residues are policed") {
  CMat k = CMat::Zero(2, 2);
  k(0, 1) = Cplx(0, 1);
  k(1, 0) = Cplx(0, -1);
  const auto is = bare_set(2, 1, k);
  CMat p = CMat::Zero(2, 2);
  p(0, 1) = 1.0;  // non-Hermitian density
  REQUIRE_THROWS_AS(energy(p, is), ConsistencyError);

  int warned = 0;
  auto saved = warn_handler();
  warn_handler() = [&](const std::string&) { ++warned; };
  p(0, 1) = 1e-8;
  (void)energy(p, is);
  warn_handler() = saved;
  REQUIRE(warned > 0);
}

TEST_CASE("fock matrix basics") {
  const auto is = generate_synthetic(24, 4, 2, {1.0, 0.02, 1.0}).integrals;
  SECTION("no electrons means bare h") {
    const CMat f = fock_matrix(CMat::Zero(4, 4).eval(), is);
    REQUIRE(norm_one_inf((f - is.h).eval()) < 1e-14);
  }
  SECTION("Hermitian and matches the energy differential") {
    Rng rng(73);
    const auto pt = random_point(rng, 2, 4);
    const CMat f = fock_matrix(pt, is);
    REQUIRE(norm_one_inf((f - f.adjoint()).eval()) < 1e-12);
    const double h = 1e-5;
    for (int it = 0; it < 6; ++it) {
      const CMat a = rng.hermitian(4, 1.0);
      const double fd =
          (oracle_energy(is, pt.p + h * a) - oracle_energy(is, pt.p - h * a)) / (2 * h);
      const double want = (f * a).trace().real();
      REQUIRE(fd == Catch::Approx(want).margin(1e-7));
    }
  }
}

TEST_CASE("two-electron bilinear form is symmetric") {
  Rng rng(74);
  const auto is = generate_synthetic(25, 4, 2, {1.0, 0.02, 1.0}).integrals;
  for (int it = 0; it < 6; ++it) {
    const CMat a = rng.cmat(4, 4, 1.0), b = rng.cmat(4, 4, 1.0);
    const Cplx ab = (two_electron_field(is, a) * b).trace();
    const Cplx ba = (two_electron_field(is, b) * a).trace();
    REQUIRE(std::abs(ab - ba) < 1e-12 * std::max(1.0, std::abs(ab)));
  }
}

TEST_CASE("gradient vanishes for diagonal h with no interaction") {
  CMat h = CMat::Zero(3, 3);
  h(0, 0) = -1;
  h(1, 1) = 1;
  h(2, 2) = 2;
  const auto is = bare_set(3, 1, h);
  const auto p0 = canonical_point(1, 3);
  const auto g = gradient({CMat::Zero(1, 2)}, is, p0);
  REQUIRE(norm_one_inf(g.b) < 1e-14);
}

TEST_CASE("gradient at the center is the occupied-virtual Fock block") {
  Rng rng(75);
  const auto is = generate_synthetic(26, 5, 2, {1.0, 0.05, 1.0}).integrals;
  const auto p0 = canonical_point(2, 5);
  const CMat f = fock_matrix(p0, is);
  const auto g = gradient({CMat::Zero(2, 3)}, is, p0);
  REQUIRE(norm_one_inf((g.b - f.topRightCorner(2, 3)).eval()) < 1e-12);

  const auto pr = random_point(rng, 2, 5);
  const CMat fr = fock_matrix(pr, is);
  const auto gr = gradient({CMat::Zero(2, 3)}, is, pr);
  const CMat want = pr.basis_y.adjoint() * fr * pr.basis_yperp;
  REQUIRE(norm_one_inf((gr.b - want).eval()) < 1e-12);
}

TEST_CASE("gradient matches finite differences of the pulled-back energy") {
  Rng rng(76);
  const double h = 1e-4;
  int draws = 0;
  for (int it = 0; it < 50; ++it) {
    const Index nu = 3 + Index(rng.uniform() * 3);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto is = generate_synthetic(100 + std::uint64_t(it), nu, n, {1.0, 0.05, 1.0}).integrals;
    const auto p0 = (it % 2 == 0) ? canonical_point(n, nu) : random_point(rng, n, nu);
    const CMat xi = rng.cmat(n, nu - n, 0.6);
    const auto g = gradient({xi}, is, p0);
    const auto basis = basis_vectors(p0);
    // spot-check three random components per draw
    for (int s = 0; s < 3; ++s) {
      const Index q = Index(rng.uniform() * double(basis.size()));
      const CMat& e = basis[size_t(q)].b;
      const double fd = (energy(retract(p0, {(xi + h * e).eval()}), is).total -
                         energy(retract(p0, {(xi - h * e).eval()}), is).total) /
                        (2 * h);
      // component q of the realified gradient
      const double got = realify_gradient(g)(q, 0);
      CAPTURE(nu, n, it, q);
      REQUIRE(fd == Catch::Approx(got).margin(1e-6 * std::max(1.0, std::abs(got))));
      ++draws;
    }
  }
  REQUIRE(draws >= 150);
}

TEST_CASE("gradient components agree with the masked directional path") {
  Rng rng(77);
  const auto is = generate_synthetic(27, 4, 2, {1.0, 0.05, 1.0}).integrals;
  const auto p0 = random_point(rng, 2, 4);
  const CMat xi = rng.cmat(2, 2, 0.5);
  const auto g = gradient({xi}, is, p0);
  const RetractionFrame fr(p0, xi);
  const CMat f_r = fock_matrix(fr.projection(), is);
  const auto eval = [&](const CMat& a) { return (f_r * a).trace(); };
  for (Index j = 0; j < 2; ++j)
    for (Index k = 0; k < 2; ++k) {
      const auto r = na_directional(p0, {xi}, eval, j, k);
      REQUIRE(std::abs(r.na - g.b(j, k)) < 1e-9 * std::max(1.0, std::abs(r.na)));
    }
}

TEST_CASE("hessian apply on zero integrals is zero") {
  const auto is = bare_set(3, 1, CMat::Zero(3, 3));
  const auto p0 = canonical_point(1, 3);
  CMat z = CMat::Zero(1, 2);
  z(0, 0) = Cplx(0.3, -0.2);
  const auto out = hessian_apply({CMat::Zero(1, 2)}, {z}, is, p0);
  REQUIRE(norm_one_inf(out.b) < 1e-14);
}

TEST_CASE("hessian diagonal at the center matches the closed form") {
  const auto is = generate_synthetic(28, 5, 2, {1.0, 0.05, 1.0}).integrals;
  const auto p0 = canonical_point(2, 5);
  const CMat f = fock_matrix(p0, is);
  const RMat hm = hessian_matrix({CMat::Zero(2, 3)}, is, p0);
  for (Index j = 0; j < 2; ++j)
    for (Index k = 0; k < 3; ++k) {
      const Index kk = 2 + k;  // basis index of the virtual function
      const double want = 0.5 * (f(kk, kk).real() - f(j, j).real()) +
                          0.5 * (is.eri_at(kk, j, j, kk) - is.eri_at(kk, kk, j, j)).real();
      const Index q = 2 * (j * 3 + k);
      REQUIRE(hm(q, q) == Catch::Approx(want).margin(1e-10));
      // eta/eta_hat cross term vanishes
      REQUIRE(std::abs(hm(q, q + 1)) < 1e-12);
      REQUIRE(std::abs(hm(q + 1, q)) < 1e-12);
    }
}

TEST_CASE("hessian for zero eri and diagonal h is diagonal with level gaps") {
  CMat h = CMat::Zero(4, 4);
  h(0, 0) = -2;
  h(1, 1) = -1;
  h(2, 2) = 1;
  h(3, 3) = 3;
  const auto is = bare_set(4, 2, h);
  const auto p0 = canonical_point(2, 4);
  const RMat hm = hessian_matrix({CMat::Zero(2, 2)}, is, p0);
  RMat want = RMat::Zero(8, 8);
  for (Index j = 0; j < 2; ++j)
    for (Index k = 0; k < 2; ++k) {
      const double g = 0.5 * (h(2 + k, 2 + k).real() - h(j, j).real());
      want(2 * (j * 2 + k), 2 * (j * 2 + k)) = g;
      want(2 * (j * 2 + k) + 1, 2 * (j * 2 + k) + 1) = g;
    }
  REQUIRE(norm_one_inf(RMat(hm - want)) < 1e-12);
}

TEST_CASE("hessian matrix matches the finite-difference Jacobian of the gradient") {
  Rng rng(78);
  const double h = 1e-4;
  for (int it = 0; it < 12; ++it) {
    const Index nu = 3 + Index(rng.uniform() * 2);
    const Index n = 1 + Index(rng.uniform() * double(nu - 1));
    const auto is = generate_synthetic(200 + std::uint64_t(it), nu, n, {1.0, 0.05, 1.0}).integrals;
    const auto p0 = (it % 2 == 0) ? canonical_point(n, nu) : random_point(rng, n, nu);
    const CMat xi = (it % 3 == 0) ? CMat::Zero(n, nu - n).eval() : rng.cmat(n, nu - n, 0.5);
    const RMat hm = hessian_matrix({xi}, is, p0);
    const auto basis = basis_vectors(p0);
    RMat fd(hm.rows(), hm.cols());
    for (size_t c = 0; c < basis.size(); ++c) {
      const CMat& e = basis[c].b;
      const RMat hi = realify_gradient(gradient({(xi + h * e).eval()}, is, p0));
      const RMat lo = realify_gradient(gradient({(xi - h * e).eval()}, is, p0));
      fd.col(Index(c)) = (hi - lo) / (2 * h);
    }
    CAPTURE(nu, n, it);
    REQUIRE(norm_one_inf(RMat(fd - hm)) < 1e-5 * std::max(1.0, norm_one_inf(hm)));
    if (norm_one_inf(xi) == 0.0)
      REQUIRE(norm_one_inf(RMat(hm - hm.transpose())) < 1e-9 * std::max(1.0, norm_one_inf(hm)));
  }
}

TEST_CASE("population") {
  const auto p0 = canonical_point(2, 5);
  REQUIRE(population(p0, {0, 1, 2, 3, 4}) == Catch::Approx(2.0).margin(1e-10));
  REQUIRE(population(p0, {0, 1}) == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(population(p0, {2, 3, 4}) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE_THROWS_AS(population(p0, {5}), InvalidInput);

  Rng rng(79);
  const auto moved = retract(p0, {rng.cmat(2, 3, 0.7)});
  REQUIRE(population(moved, {0, 1, 2, 3, 4}) == Catch::Approx(2.0).margin(1e-10));
}

TEST_CASE("commutator residual") {
  CMat h = CMat::Zero(3, 3);
  h(0, 0) = -1;
  h(1, 1) = 1;
  h(2, 2) = 2;
  const auto is = bare_set(3, 1, h);
  REQUIRE(commutator_residual(canonical_point(1, 3), is) < 1e-14);

  Rng rng(80);
  const auto is2 = generate_synthetic(29, 4, 2, {1.0, 0.05, 1.0}).integrals;
  const auto pr = random_point(rng, 2, 4);
  REQUIRE(commutator_residual(pr, is2) > 1e-8);
}
