#pragma once

// One- and two-electron integral data: storage, symmetry validation, basis
// transformation, and a deterministic synthetic generator.
//
// Index conventions (fixed; always go through the accessors):
//   h(k,j)              = <phi_k, h phi_j>
//   attraction[l](j,k)  = integral of Z_l/|x - xbar_l| phi_j* phi_k
//   eri entry (j,k,l,m) = [jk|lm], with the j and l slots conjugated.
// Inner products are linear in the first argument, so a basis change
// phi' = C phi (rows of C = coefficients of new in old) acts as
// A' = C A C* on one-electron matrices.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hfcert/matnorm.hpp"
#include "hfcert/types.hpp"

namespace hfcert {

struct IntegralSet {
  Index nu = 0;      // basis size
  Index n_elec = 0;  // N, number of occupied functions
  CMat h;            // nu x nu Hermitian
  CMat kinetic;      // nu x nu Hermitian
  std::vector<CMat> attraction;  // one Hermitian nu x nu matrix per nucleus
  std::vector<Cplx> eri;         // flat nu^4, row-major (j,k,l,m)
  std::vector<int> charges;
  std::vector<std::array<double, 3>> positions;

  Cplx eri_at(Index j, Index k, Index l, Index m) const {
    if (Index(eri.size()) != nu * nu * nu * nu)
      throw InvalidInput("eri_at: tensor size does not match nu");
    if (((j | k | l | m) < 0) || j >= nu || k >= nu || l >= nu || m >= nu)
      throw InvalidInput("eri_at: index out of range");
    return eri[size_t(((j * nu + k) * nu + l) * nu + m)];
  }
  Cplx& eri_ref(Index j, Index k, Index l, Index m) {
    if (((j | k | l | m) < 0) || j >= nu || k >= nu || l >= nu || m >= nu)
      throw InvalidInput("eri_ref: index out of range");
    return eri[size_t(((j * nu + k) * nu + l) * nu + m)];
  }
};

// <jl||km> := [jk|lm] - [jm|lk]
inline Cplx antisym(const IntegralSet& is, Index j, Index l, Index k, Index m) {
  return is.eri_at(j, k, l, m) - is.eri_at(j, m, l, k);
}

struct IntegralViolation {
  std::string check;           // which invariant failed
  std::array<Index, 4> index;  // witness (unused slots -1)
  double magnitude = 0.0;      // size of the worst violation
  Index count = 0;             // how many entries violated
};

struct IntegralReport {
  std::vector<IntegralViolation> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {

inline void check_hermitian(const CMat& a, const std::string& name,
                            std::vector<IntegralViolation>& out) {
  const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());
  IntegralViolation v{name + "-hermitian", {-1, -1, -1, -1}, 0.0, 0};
  for (Index r = 0; r < a.rows(); ++r)
    for (Index c = r; c < a.cols(); ++c) {
      const double d = std::abs(a(r, c) - std::conj(a(c, r)));
      if (d > tol) {
        ++v.count;
        if (d > v.magnitude) {
          v.magnitude = d;
          v.index = {r, c, -1, -1};
        }
      }
    }
  if (v.count > 0) out.push_back(std::move(v));
}

}  // namespace detail

inline IntegralReport validate(const IntegralSet& is) {
  IntegralReport rep;
  const Index nu = is.nu;
  if (nu <= 0 || is.h.rows() != nu || is.h.cols() != nu || is.kinetic.rows() != nu ||
      is.kinetic.cols() != nu || Index(is.eri.size()) != nu * nu * nu * nu ||
      is.charges.size() != is.attraction.size() || is.positions.size() != is.attraction.size()) {
    rep.violations.push_back({"shape", {-1, -1, -1, -1}, 0.0, 1});
    return rep;
  }
  for (const CMat& a : is.attraction)
    if (a.rows() != nu || a.cols() != nu) {
      rep.violations.push_back({"shape", {-1, -1, -1, -1}, 0.0, 1});
      return rep;
    }
  if (is.n_elec <= 0 || is.n_elec >= nu)
    rep.violations.push_back({"rank", {is.n_elec, -1, -1, -1}, double(is.n_elec), 1});

  detail::check_hermitian(is.h, "h", rep.violations);
  detail::check_hermitian(is.kinetic, "kinetic", rep.violations);
  for (const CMat& a : is.attraction) detail::check_hermitian(a, "attraction", rep.violations);

  double scale = 1.0;
  for (const Cplx& z : is.eri) scale = std::max(scale, std::abs(z));
  const double tol = 1e-12 * scale;
  IntegralViolation conj_v{"eri-conjugation", {-1, -1, -1, -1}, 0.0, 0};
  IntegralViolation exch_v{"eri-exchange", {-1, -1, -1, -1}, 0.0, 0};
  for (Index j = 0; j < nu; ++j)
    for (Index k = 0; k < nu; ++k)
      for (Index l = 0; l < nu; ++l)
        for (Index m = 0; m < nu; ++m) {
          const std::array<Index, 4> me{j, k, l, m};
          // [jk|lm]* = [kj|ml]; visit each unordered pair once.
          if (me <= std::array<Index, 4>{k, j, m, l}) {
            const double d = std::abs(std::conj(is.eri_at(j, k, l, m)) - is.eri_at(k, j, m, l));
            if (d > tol) {
              ++conj_v.count;
              if (d > conj_v.magnitude) {
                conj_v.magnitude = d;
                conj_v.index = me;
              }
            }
          }
          // [jk|lm] = [lm|jk]
          if (me <= std::array<Index, 4>{l, m, j, k}) {
            const double d = std::abs(is.eri_at(j, k, l, m) - is.eri_at(l, m, j, k));
            if (d > tol) {
              ++exch_v.count;
              if (d > exch_v.magnitude) {
                exch_v.magnitude = d;
                exch_v.index = me;
              }
            }
          }
        }
  if (conj_v.count > 0) rep.violations.push_back(std::move(conj_v));
  if (exch_v.count > 0) rep.violations.push_back(std::move(exch_v));

  CMat sum = is.kinetic;
  for (const CMat& a : is.attraction) sum -= a;
  const double dnorm = norm_one_inf((is.h - sum).eval());
  if (dnorm > 1e-10 * std::max(1.0, norm_one_inf(is.h)))
    rep.violations.push_back({"decomposition", {-1, -1, -1, -1}, dnorm, 1});
  return rep;
}

// phi'_j = sum_k C_jk phi_k.  A matrix element a_{jk} carries the conjugate
// of the j orbital (like the j and l slots of the two-electron tensor), so
// one-electron matrices map to conj(C) A C^T and the tensor is contracted
// one index at a time (O(nu^5) per stage), conjugating the coefficients on
// the j and l slots.
inline IntegralSet transform_basis(const IntegralSet& is, const CMat& c) {
  const Index nu = is.nu;
  if (c.rows() != nu || c.cols() != nu) throw InvalidInput("transform_basis: C shape");
  if (!c.allFinite()) throw InvalidInput("transform_basis: non-finite C");
  Eigen::FullPivLU<CMat> lu(c);
  if (!lu.isInvertible()) throw InvalidInput("transform_basis: singular C");

  IntegralSet out = is;
  out.h = c.conjugate() * is.h * c.transpose();
  out.kinetic = c.conjugate() * is.kinetic * c.transpose();
  for (size_t l = 0; l < is.attraction.size(); ++l)
    out.attraction[l] = c.conjugate() * is.attraction[l] * c.transpose();

  const size_t n4 = size_t(nu * nu * nu * nu);
  std::vector<Cplx> cur = is.eri, next(n4);
  // Contract the leading index, then rotate the tensor so each stage
  // contracts what is currently first: (j,k,l,m) -> (k,l,m,j).
  const bool conjugate_stage[4] = {true, false, true, false};
  for (int stage = 0; stage < 4; ++stage) {
    for (Index a = 0; a < nu; ++a)
      for (Index b = 0; b < nu; ++b)
        for (Index d = 0; d < nu; ++d)
          for (Index e = 0; e < nu; ++e) {
            Cplx acc(0, 0);
            const size_t base = size_t((b * nu + d) * nu + e);
            for (Index ap = 0; ap < nu; ++ap) {
              const Cplx coef = conjugate_stage[stage] ? std::conj(c(a, ap)) : c(a, ap);
              acc += coef * cur[size_t(ap * nu * nu * nu) + base];
            }
            // rotate: result index order (b,d,e,a)
            next[size_t((((b * nu) + d) * nu + e) * nu + a)] = acc;
          }
    std::swap(cur, next);
  }
  out.eri = std::move(cur);
  return out;
}

struct SyntheticParams {
  double gap = 1.0;       // target splitting of the occupied/virtual levels
  double coupling = 0.0;  // target occupied-virtual mixed-block norm
  double decay = 1.0;     // exponential decay rate of off-diagonal magnitudes
};

struct SyntheticResult {
  IntegralSet integrals;
  WeightSet weights;
};

namespace detail {

struct SynthRng {
  std::mt19937_64 eng;
  explicit SynthRng(std::uint64_t seed) : eng(seed) {}
  double u() { return double(eng() >> 11) * 0x1.0p-53; }
  Cplx phase() {
    const double t = 2.0 * 3.14159265358979323846 * u();
    return {std::cos(t), std::sin(t)};
  }
};

}  // namespace detail

// Deterministic test-instance factory.  Builds a localized instance whose
// effective one-particle operator at the reference projection (occupying
// the first N functions) has an exact diagonal gap `gap`, a single
// occupied-virtual coupling of size `coupling`, and small exponentially
// decaying off-diagonal structure, together with weights satisfying the
// summability condition on a 1-D chain of basis-function centers.
inline SyntheticResult generate_synthetic(std::uint64_t seed, Index nu, Index n,
                                          const SyntheticParams& prm = {}) {
  if (n <= 0 || n >= nu) throw InvalidInput("generate_synthetic: need 0 < N < nu");
  if (prm.gap <= 0) throw InvalidInput("generate_synthetic: gap must be positive");
  if (prm.coupling < 0) throw InvalidInput("generate_synthetic: coupling must be nonnegative");
  if (prm.decay <= 0) throw InvalidInput("generate_synthetic: decay must be positive");
  detail::SynthRng rng(seed);

  // Separable two-electron tensor: eri = sum_t a_t (x) a_t with Hermitian
  // decaying a_t; both tensor symmetries hold per term.
  std::vector<CMat> terms;
  for (int t = 0; t < 2; ++t) {
    CMat a = CMat::Zero(nu, nu);
    for (Index j = 0; j < nu; ++j) a(j, j) = 0.02 + 0.015 * rng.u();
    for (Index j = 0; j < nu; ++j)
      for (Index k = j + 1; k < nu; ++k) {
        const Cplx v = 0.003 * std::exp(-prm.decay * double(k - j - 1)) * rng.phase();
        a(j, k) = v;
        a(k, j) = std::conj(v);
      }
    terms.push_back(std::move(a));
  }
  IntegralSet is;
  is.nu = nu;
  is.n_elec = n;
  is.eri.assign(size_t(nu * nu * nu * nu), Cplx(0, 0));
  for (Index j = 0; j < nu; ++j)
    for (Index k = 0; k < nu; ++k)
      for (Index l = 0; l < nu; ++l)
        for (Index m = 0; m < nu; ++m) {
          Cplx acc(0, 0);
          for (const CMat& a : terms) acc += a(j, k) * a(l, m);
          is.eri_ref(j, k, l, m) = acc;
        }

  // Effective operator target at the reference projection.
  CMat f = CMat::Zero(nu, nu);
  for (Index j = 0; j < n; ++j) f(j, j) = -0.5 * prm.gap - 0.03 * prm.gap * double(n - 1 - j);
  for (Index k = n; k < nu; ++k) f(k, k) = 0.5 * prm.gap + 0.03 * prm.gap * double(k - n);
  const auto fill_block = [&](Index lo, Index hi) {
    for (Index j = lo; j < hi; ++j)
      for (Index k = j + 1; k < hi; ++k) {
        const Cplx v = 0.005 * prm.gap * std::exp(-prm.decay * double(k - j - 1)) * rng.phase();
        f(j, k) = v;
        f(k, j) = std::conj(v);
      }
  };
  fill_block(0, n);
  fill_block(n, nu);
  if (prm.coupling > 0) {
    f(0, n) = prm.coupling;
    f(n, 0) = prm.coupling;
  }

  // Two-electron mean field of the reference projection:
  // G(k,j) = sum_{l<N} ([kj|ll] - [kl|lj]); then h := F_target - G.
  CMat g = CMat::Zero(nu, nu);
  for (Index k = 0; k < nu; ++k)
    for (Index j = 0; j < nu; ++j)
      for (Index l = 0; l < n; ++l)
        g(k, j) += is.eri_at(k, j, l, l) - is.eri_at(k, l, l, j);
  is.h = f - g;

  // Nuclei: small positive-kernel-shaped Hermitian matrices at the chain
  // ends; kinetic absorbs the rest of h.
  is.charges = {1, 2};
  is.positions = {{-0.5, 0.0, 0.0}, {double(nu) - 0.5, 0.0, 0.0}};
  for (int l = 0; l < 2; ++l) {
    CMat a = CMat::Zero(nu, nu);
    const double z = double(is.charges[size_t(l)]);
    for (Index j = 0; j < nu; ++j) a(j, j) = 0.01 * z * (1.0 + 0.2 * rng.u());
    for (Index j = 0; j < nu; ++j)
      for (Index k = j + 1; k < nu; ++k) {
        const Cplx v = 0.002 * z * std::exp(-prm.decay * double(k - j)) * rng.phase();
        a(j, k) = v;
        a(k, j) = std::conj(v);
      }
    is.attraction.push_back(std::move(a));
  }
  is.kinetic = is.h;
  for (const CMat& a : is.attraction) is.kinetic += a;

  SyntheticResult out;
  out.integrals = std::move(is);
  std::vector<std::array<double, 3>> pts;
  for (Index j = 0; j < nu; ++j) pts.push_back({double(j), 0.0, 0.0});
  out.weights = weights_from_points(pts, 2.0);
  return out;
}

}  // namespace hfcert
