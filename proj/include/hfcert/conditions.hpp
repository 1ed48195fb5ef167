#pragma once

// Measurement of the hypothesis constants from integral data and weights:
//
//  localized-orbital bounds:   |[jk|lm]| <= eps_tilde v_jl^-1 w_jk^-1 w_lm^-1
//                              (admissible tuples), |[jk|lm]| <= u_jl^-1
//                              w_jk^-1 w_lm^-1, row/column sums c_tilde,
//                              c_hat, and the kinetic row-sum bound c_check;
//  orbital-interaction bounds: mixed-block norm eps, within-block
//                              off-diagonal sum delta, level gap gamma;
//  nuclear-interaction bound:  |attraction_{l,j,k}| w_jk summed over nuclei,
//                              c_breve.
//
// The factorizations (v, u, u_breve) are measured as the tightest ones the
// data admits (sup-based), so every clause holds with the emitted constants
// by construction; inverse entries are stored since a vanishing bound means
// an infinite weight.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hfcert/hf.hpp"
#include "hfcert/integrals.hpp"
#include "hfcert/matnorm.hpp"
#include "hfcert/types.hpp"

namespace hfcert {

struct LmoMeasurement {
  double eps_tilde = 0;  // admissible-tuple normalization mass
  double c_tilde = 0;    // max_j sum_l u_jl^-1
  double c_hat = 0;      // max over tuples of |[jk|lm]| w_jk w_lm
  double c_check = 0;    // max_j sum_k |kinetic_jk|
  RMat v_inv;            // symmetric, max column sum exactly 1 (or 1/nu rows if zero)
  RMat u_inv;            // symmetric
};

struct OiMeasurement {
  double eps = 0;    // occupied-virtual mixed block, max(1,inf) norm
  double delta = 0;  // worst within-block off-diagonal absolute row sum
  double gamma = 0;  // min level gap incl. two-electron correction; signed
};

struct NiMeasurement {
  double c_breve = 0;            // max_{j,k} sum_l u_breve_{jkl}^-1
  std::vector<RMat> u_breve_inv; // one matrix per nucleus
};

struct ConditionFeasibility {
  bool eps_tilde_lt_one = false;
  bool eps_lt_one = false;
  bool gamma_positive = false;
  bool denominator_positive = false;  // gamma/2 - delta - 2 eps_tilde > 0
};

struct ConditionReport {
  double eps_tilde = 0, c_tilde = 0, c_hat = 0, c_check = 0, c_breve = 0;
  double eps = 0, delta = 0, gamma = 0;
  RMat v_inv, u_inv;
  std::vector<RMat> u_breve_inv;
  ConditionFeasibility feasibility;
};

namespace detail {

inline bool same_pair(Index j, Index k, Index l, Index m) {
  return (j == l && k == m) || (j == m && k == l);
}
// Admissible for the eps_tilde clause: {j,k} != {l,m} and (j != k or l != m).
inline bool lmo_admissible(Index j, Index k, Index l, Index m) {
  return !same_pair(j, k, l, m) && (j != k || l != m);
}

}  // namespace detail

inline LmoMeasurement measure_lmo(const IntegralSet& is, const WeightSet& ws) {
  const Index nu = is.nu;
  if (ws.dim() != nu) throw InvalidInput("measure_lmo: weight dimension mismatch");
  LmoMeasurement out;
  out.u_inv = RMat::Zero(nu, nu);
  RMat v_tilde_inv = RMat::Zero(nu, nu);
  for (Index j = 0; j < nu; ++j)
    for (Index l = 0; l < nu; ++l)
      for (Index k = 0; k < nu; ++k)
        for (Index m = 0; m < nu; ++m) {
          const double val = std::abs(is.eri_at(j, k, l, m)) * ws.w(j, k) * ws.w(l, m);
          out.u_inv(j, l) = std::max(out.u_inv(j, l), val);
          out.c_hat = std::max(out.c_hat, val);
          if (detail::lmo_admissible(j, k, l, m))
            v_tilde_inv(j, l) = std::max(v_tilde_inv(j, l), val);
        }
  // Exchange symmetry of a valid tensor already makes these symmetric; taking
  // the elementwise max keeps the factorizations admissible on arbitrary data.
  out.u_inv = out.u_inv.cwiseMax(out.u_inv.transpose().eval()).eval();
  v_tilde_inv = v_tilde_inv.cwiseMax(v_tilde_inv.transpose().eval()).eval();
  for (Index j = 0; j < nu; ++j) out.c_tilde = std::max(out.c_tilde, out.u_inv.row(j).sum());
  // Normalize so the column-sum clause holds with equality; the mass is
  // eps_tilde.  Symmetry of v_tilde_inv survives the global scaling.
  double mass = 0;
  for (Index l = 0; l < nu; ++l) mass = std::max(mass, v_tilde_inv.col(l).sum());
  out.eps_tilde = mass;
  if (mass > 0)
    out.v_inv = v_tilde_inv / mass;
  else
    out.v_inv = RMat::Constant(nu, nu, 1.0 / double(nu));
  out.c_check = 0;
  for (Index j = 0; j < nu; ++j)
    out.c_check = std::max(out.c_check, is.kinetic.row(j).cwiseAbs().sum());
  return out;
}

inline OiMeasurement measure_oi(const IntegralSet& is) {
  const Index nu = is.nu, n = is.n_elec;
  if (n <= 0 || n >= nu) throw InvalidInput("measure_oi: need 0 < N < nu");
  const CMat f = fock_matrix(canonical_point(n, nu), is);
  OiMeasurement out;
  out.eps = norm_one_inf(f.topRightCorner(n, nu - n).eval());
  for (Index j = 0; j < nu; ++j) {
    const bool occ = j < n;
    double row = 0;
    for (Index k = occ ? 0 : n; k < (occ ? n : nu); ++k)
      if (k != j) row += std::abs(f(j, k));
    out.delta = std::max(out.delta, row);
  }
  bool first = true;
  for (Index j = 0; j < n; ++j)
    for (Index k = n; k < nu; ++k) {
      // <kj||kj> = [kk|jj] - [kj|jk]
      const double corr =
          detail::real_checked(is.eri_at(k, k, j, j) - is.eri_at(k, j, j, k), "gap correction");
      const double gap = f(k, k).real() - f(j, j).real() - corr;
      if (first || gap < out.gamma) out.gamma = gap;
      first = false;
    }
  return out;
}

inline NiMeasurement measure_ni(const IntegralSet& is, const WeightSet& ws) {
  const Index nu = is.nu;
  if (ws.dim() != nu) throw InvalidInput("measure_ni: weight dimension mismatch");
  NiMeasurement out;
  for (const CMat& a : is.attraction)
    out.u_breve_inv.push_back((ws.w.array() * a.cwiseAbs().array()).matrix());
  for (Index j = 0; j < nu; ++j)
    for (Index k = 0; k < nu; ++k) {
      double s = 0;
      for (const RMat& u : out.u_breve_inv) s += u(j, k);
      out.c_breve = std::max(out.c_breve, s);
    }
  return out;
}

inline ConditionReport measure_conditions(const IntegralSet& is, const WeightSet& ws) {
  ConditionReport rep;
  const auto lmo = measure_lmo(is, ws);
  rep.eps_tilde = lmo.eps_tilde;
  rep.c_tilde = lmo.c_tilde;
  rep.c_hat = lmo.c_hat;
  rep.c_check = lmo.c_check;
  rep.v_inv = lmo.v_inv;
  rep.u_inv = lmo.u_inv;
  const auto oi = measure_oi(is);
  rep.eps = oi.eps;
  rep.delta = oi.delta;
  rep.gamma = oi.gamma;
  auto ni = measure_ni(is, ws);
  rep.c_breve = ni.c_breve;
  rep.u_breve_inv = std::move(ni.u_breve_inv);
  rep.feasibility.eps_tilde_lt_one = rep.eps_tilde < 1.0;
  rep.feasibility.eps_lt_one = rep.eps < 1.0;
  rep.feasibility.gamma_positive = rep.gamma > 0.0;
  rep.feasibility.denominator_positive = 0.5 * rep.gamma - rep.delta - 2.0 * rep.eps_tilde > 0.0;
  return rep;
}

struct ContractionWitness {
  std::string what;            // which clause or bound failed
  std::array<Index, 4> index;  // witness tuple (-1 for unused slots)
  double lhs = 0, rhs = 0;
};

struct ContractionCheck {
  bool pass = true;
  std::vector<ContractionWitness> failures;
  int trials_run = 0;
};

namespace detail {

struct CheckRng {
  std::mt19937_64 eng;
  explicit CheckRng(std::uint64_t seed) : eng(seed) {}
  double u() { return double(eng() >> 11) * 0x1.0p-53; }
  Cplx entry() {
    const double t = 2.0 * 3.14159265358979323846 * u();
    return (2.0 * u() - 1.0) * Cplx(std::cos(t), std::sin(t));
  }
};

}  // namespace detail

// Replays every hypothesis clause against the reported constants, then
// exercises the three contraction bounds
//   ||T||_{1,inf} <= eps_tilde ||A'||,  ||T_tilde|| <= c_tilde ||A'||,
//   ||T_hat|| <= c_hat ||A'||,
// with T masked by (1-delta_jk)(1-delta_{{j,k},{l,m}}), on random matrices
// A', including all 24 permuted placements of the tensor indices in T.
inline ContractionCheck contraction_bound_check(const IntegralSet& is, const WeightSet& ws,
                                                const ConditionReport& rep, int trials,
                                                std::uint64_t seed = 12345) {
  const Index nu = is.nu;
  ContractionCheck out;
  const double tol = 1e-12;
  const auto fail = [&](std::string what, std::array<Index, 4> idx, double lhs, double rhs) {
    out.pass = false;
    out.failures.push_back({std::move(what), idx, lhs, rhs});
  };

  // Clause scan with the emitted factorizations.
  for (Index j = 0; j < nu; ++j)
    for (Index k = 0; k < nu; ++k)
      for (Index l = 0; l < nu; ++l)
        for (Index m = 0; m < nu; ++m) {
          const double a = std::abs(is.eri_at(j, k, l, m));
          if (detail::lmo_admissible(j, k, l, m)) {
            const double bound =
                rep.eps_tilde * rep.v_inv(j, l) / (ws.w(j, k) * ws.w(l, m));
            if (a > bound + tol) fail("lmo-i", {j, k, l, m}, a, bound);
          }
          const double bu = rep.u_inv(j, l) / (ws.w(j, k) * ws.w(l, m));
          if (a > bu + tol) fail("lmo-iii", {j, k, l, m}, a, bu);
          const double bh = rep.c_hat / (ws.w(j, k) * ws.w(l, m));
          if (a > bh + tol) fail("lmo-v", {j, k, l, m}, a, bh);
        }
  for (Index l = 0; l < nu; ++l) {
    const double s = rep.v_inv.col(l).sum();
    if (s > 1.0 + tol) fail("lmo-ii", {-1, -1, -1, l}, s, 1.0);
  }
  for (Index j = 0; j < nu; ++j) {
    const double s = rep.u_inv.row(j).sum();
    if (s > rep.c_tilde + tol) fail("lmo-iv", {j, -1, -1, -1}, s, rep.c_tilde);
    const double ck = is.kinetic.row(j).cwiseAbs().sum();
    if (ck > rep.c_check + tol) fail("lmo-vi", {j, -1, -1, -1}, ck, rep.c_check);
  }
  for (Index j = 0; j < nu; ++j)
    for (Index k = 0; k < nu; ++k) {
      double s = 0;
      for (const CMat& a : is.attraction) s += std::abs(a(j, k)) * ws.w(j, k);
      if (s > rep.c_breve + tol) fail("ni", {j, k, -1, -1}, s, rep.c_breve);
    }

  // Norm-level bounds on random matrices.
  std::array<Index, 4> perms[24];
  {
    std::array<Index, 4> p{0, 1, 2, 3};
    int n = 0;
    do {
      perms[n++] = p;
    } while (std::next_permutation(p.begin(), p.end()));
  }
  detail::CheckRng rng(seed);
  for (int t = 0; t < trials; ++t) {
    CMat a(nu, nu);
    for (Index r = 0; r < nu; ++r)
      for (Index c = 0; c < nu; ++c) a(r, c) = rng.entry();
    const double na = norm_one_inf(a);
    if (na == 0.0) continue;
    ++out.trials_run;

    CMat t_tilde = CMat::Zero(nu, nu), t_hat = CMat::Zero(nu, nu);
    for (Index j = 0; j < nu; ++j)
      for (Index k = 0; k < nu; ++k) {
        Cplx acc_t(0, 0), acc_h(0, 0);
        for (Index l = 0; l < nu; ++l)
          for (Index m = 0; m < nu; ++m) {
            acc_t += is.eri_at(j, k, l, m) * a(l, m);
            acc_h += is.eri_at(j, m, l, k) * a(l, m);
          }
        t_tilde(j, k) = acc_t;
        t_hat(j, k) = acc_h;
      }
    if (norm_one_inf(t_tilde) > rep.c_tilde * na * (1 + 1e-12) + tol)
      fail("bound-b", {Index(t), -1, -1, -1}, norm_one_inf(t_tilde), rep.c_tilde * na);
    if (norm_one_inf(t_hat) > rep.c_hat * na * (1 + 1e-12) + tol)
      fail("bound-c", {Index(t), -1, -1, -1}, norm_one_inf(t_hat), rep.c_hat * na);

    for (int pi = 0; pi < 24; ++pi) {
      CMat tm = CMat::Zero(nu, nu);
      Index idx[4];
      for (Index j = 0; j < nu; ++j)
        for (Index k = 0; k < nu; ++k) {
          if (j == k) continue;
          Cplx acc(0, 0);
          for (Index l = 0; l < nu; ++l)
            for (Index m = 0; m < nu; ++m) {
              if (detail::same_pair(j, k, l, m)) continue;
              const Index base[4] = {j, k, l, m};
              for (int s = 0; s < 4; ++s) idx[s] = base[perms[pi][size_t(s)]];
              acc += is.eri_at(idx[0], idx[1], idx[2], idx[3]) * a(l, m);
            }
          tm(j, k) = acc;
        }
      if (norm_one_inf(tm) > rep.eps_tilde * na * (1 + 1e-12) + tol) {
        fail("bound-a-perm-" + std::to_string(pi), {Index(t), -1, -1, -1}, norm_one_inf(tm),
             rep.eps_tilde * na);
        break;
      }
    }
  }
  return out;
}

}  // namespace hfcert
