#pragma once

// Semi-local Newton certification for the pulled-back energy gradient.
//
// From the measured constants, an affine-invariant Newton–Kantorovich
// criterion is assembled:
//   c*   = 1/(gamma/2 - delta - 2 eps_tilde)   bounds ||F'(0)^{-1}||,
//   L    = C + 3 D                             bounds the Hessian Lipschitz
//                                              constant on the eps_hat ball,
//   theta = c*^2 eps L < 1/2  and  eps_hat > tau*
// certify existence of a critical point within tau* of the start, uniqueness
// within tau**, and a displacement bound on the projections themselves.
// newton_solve then produces the point; displacement_check closes the loop.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "hfcert/conditions.hpp"
#include "hfcert/grassmann.hpp"
#include "hfcert/hf.hpp"
#include "hfcert/matnorm.hpp"
#include "hfcert/types.hpp"

namespace hfcert {

struct LipschitzConstants {
  double big_c = 0, big_d = 0, big_l = 0;
};

// Closed forms for the second-derivative Lipschitz bound on the ball of
// radius eps_hat; both factors blow up as eps_hat -> 1.
inline LipschitzConstants lipschitz_constants(double eps_hat, double c_tilde, double c_hat,
                                              double c_breve, double c_check) {
  if (!(eps_hat >= 0.0) || eps_hat >= 1.0)
    throw InvalidInput("lipschitz_constants: need 0 <= eps_hat < 1");
  const double e = eps_hat;
  const double a = 1.0 + e;
  const double q = 1.0 / (1.0 - e * e);
  LipschitzConstants out;
  out.big_c = 6.0 * (c_tilde + c_hat + c_breve + c_check) * a * a * q * q * q *
              (1.0 + 2.0 * e * (1.0 + q * a * (1.0 + 3.0 * e)) + 2.0 * q * q * a * a * e * e);
  out.big_d = 2.0 * (c_tilde + c_hat) * a * q * q * (1.0 + q * a * e) *
              (1.0 + q * a * (1.0 + 5.0 * e) + 4.0 * q * q * a * a * e * e);
  out.big_l = out.big_c + 3.0 * out.big_d;
  return out;
}

struct GateValues {
  double theta = 0;
  double tau_star = 0;      // stable form 2 c* eps / (1 + sqrt(1 - 2 theta))
  double tau_star_alt = 0;  // (1 - sqrt(1 - 2 theta)) / (c* L)
  double tau_star_star = 0;
  bool theta_lt_half = false;
  bool eps_hat_gt_tau_star = false;
};

inline GateValues kantorovich_gates(double c_star, double eps, double eps_hat, double big_l) {
  GateValues g;
  g.theta = c_star * c_star * eps * big_l;
  g.theta_lt_half = g.theta < 0.5;
  if (!g.theta_lt_half) return g;
  const double s = std::sqrt(1.0 - 2.0 * g.theta);
  g.tau_star = 2.0 * c_star * eps / (1.0 + s);
  if (c_star * big_l > 0) {
    g.tau_star_alt = (1.0 - s) / (c_star * big_l);
    g.tau_star_star = (1.0 + s) / (c_star * big_l);
  } else {
    g.tau_star_alt = g.tau_star;
    g.tau_star_star = std::numeric_limits<double>::infinity();
  }
  g.eps_hat_gt_tau_star = eps_hat > g.tau_star;
  return g;
}

struct KantorovichGateFlags {
  bool positivity = false;        // gamma/2 - delta - 2 eps_tilde > 0
  bool theta_lt_half = false;     // c*^2 eps L < 1/2
  bool eps_hat_gt_tau_star = false;
};

struct KantorovichCertificate {
  double denominator = 0;  // gamma/2 - delta - 2 eps_tilde
  double c_star = 0;
  double eps = 0;
  double eps_hat = 0;
  double big_c = 0, big_d = 0, big_l = 0;
  double theta = 0;
  double tau_star = 0, tau_star_alt = 0, tau_star_star = 0;
  double r = 0;  // tau* minus the first-step bound c* eps
  double displacement_bound = 0;
  KantorovichGateFlags gates;
  bool valid = false;
};

// Evaluates the certificate at a fixed ball radius.
inline KantorovichCertificate certify_at(const ConditionReport& rep, double eps_hat) {
  KantorovichCertificate cert;
  cert.denominator = 0.5 * rep.gamma - rep.delta - 2.0 * rep.eps_tilde;
  cert.eps = rep.eps;
  cert.gates.positivity = cert.denominator > 0;
  if (!cert.gates.positivity) return cert;
  cert.c_star = 1.0 / cert.denominator;
  cert.eps_hat = eps_hat;
  const auto lip = lipschitz_constants(eps_hat, rep.c_tilde, rep.c_hat, rep.c_breve, rep.c_check);
  cert.big_c = lip.big_c;
  cert.big_d = lip.big_d;
  cert.big_l = lip.big_l;
  const auto g = kantorovich_gates(cert.c_star, cert.eps, eps_hat, lip.big_l);
  cert.theta = g.theta;
  cert.gates.theta_lt_half = g.theta_lt_half;
  cert.gates.eps_hat_gt_tau_star = g.eps_hat_gt_tau_star;
  if (g.theta_lt_half) {
    cert.tau_star = g.tau_star;
    cert.tau_star_alt = g.tau_star_alt;
    cert.tau_star_star = g.tau_star_star;
    cert.r = g.tau_star - cert.c_star * cert.eps;
    const double t = g.tau_star;
    cert.displacement_bound = t * (1.0 + (1.0 + t) * (1.0 + t) / (1.0 - t * t));
  }
  cert.valid = cert.gates.positivity && cert.gates.theta_lt_half && cert.gates.eps_hat_gt_tau_star;
  return cert;
}

// Picks the smallest ball radius (hence the smallest Lipschitz constant L)
// for which both gates hold: a 64-point logarithmic scan over
// (1e-4, 1 - 1e-4) brackets the feasible region, then 40 bisection steps
// sharpen the lower edge.  The returned certificate stays strictly feasible.
inline KantorovichCertificate certify(const ConditionReport& rep) {
  KantorovichCertificate probe = certify_at(rep, 0.5);
  if (!probe.gates.positivity) return probe;

  const double lo = 1e-4, hi = 1.0 - 1e-4;
  const int grid = 64;
  const auto feasible = [&](double eh) {
    const auto c = certify_at(rep, eh);
    return c.valid;
  };
  int first = -1;
  double prev = lo;
  for (int i = 0; i < grid; ++i) {
    const double eh = lo * std::pow(hi / lo, double(i) / double(grid - 1));
    if (feasible(eh)) {
      first = i;
      break;
    }
    prev = eh;
  }
  if (first < 0) {
    // Infeasible everywhere: report the attempt with the least gate violation.
    KantorovichCertificate best;
    double best_margin = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
      const double eh = lo * std::pow(hi / lo, double(i) / double(grid - 1));
      const auto c = certify_at(rep, eh);
      double margin = 0.5 - c.theta;
      if (c.gates.theta_lt_half) margin = std::min(margin, eh - c.tau_star);
      if (margin > best_margin) {
        best_margin = margin;
        best = c;
      }
    }
    return best;
  }
  double good = lo * std::pow(hi / lo, double(first) / double(grid - 1));
  if (first > 0) {
    double bad = prev;
    for (int it = 0; it < 40; ++it) {
      const double mid = std::sqrt(bad * good);  // bisect logarithmically
      (feasible(mid) ? good : bad) = mid;
    }
  }
  return certify_at(rep, good);
}

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  bool recenter = false;
};

struct NewtonIterate {
  CMat b;               // chart coordinate of the iterate
  double residual_norm = 0;
  double step_norm = 0;  // norm of the correction taken from this iterate
};

struct NewtonTrace {
  std::vector<NewtonIterate> iterates;
  bool converged = false;
  GrassmannPoint final_point;
};

namespace detail {

inline RVec realify_coord(const CMat& b) {
  RVec v(2 * b.rows() * b.cols());
  for (Index j = 0; j < b.rows(); ++j)
    for (Index k = 0; k < b.cols(); ++k) {
      const Index q = 2 * (j * b.cols() + k);
      v(q) = b(j, k).real();
      v(q + 1) = b(j, k).imag();
    }
  return v;
}

inline CMat unrealify_coord(const RVec& v, Index n, Index m) {
  CMat b(n, m);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < m; ++k) {
      const Index q = 2 * (j * m + k);
      b(j, k) = Cplx(v(q), v(q + 1));
    }
  return b;
}

}  // namespace detail

// Newton iteration on the pullback gradient in the chart anchored at the
// reference occupied subspace.  With recenter=true the chart is re-anchored
// at every step (useful far from the reference, but outside the single-chart
// certificate).
inline NewtonTrace newton_solve(const IntegralSet& is, const NewtonOptions& opts = {}) {
  const Index n = is.n_elec, nu = is.nu;
  if (n <= 0 || n >= nu) throw InvalidInput("newton_solve: need 0 < N < nu");
  if (opts.tol <= 0 || opts.max_iter < 1) throw InvalidInput("newton_solve: bad options");
  const Index m = nu - n;
  GrassmannPoint anchor = canonical_point(n, nu);
  CMat b = CMat::Zero(n, m);
  NewtonTrace tr;
  for (int it = 0;; ++it) {
    const TangentCoord g = gradient(TangentCoord{b}, is, anchor);
    const double res = norm_one_inf(g.b);
    if (res <= opts.tol) {
      tr.iterates.push_back({b, res, 0.0});
      tr.converged = true;
      break;
    }
    if (it >= opts.max_iter) {
      tr.iterates.push_back({b, res, 0.0});
      break;
    }
    const RMat h = hessian_matrix(TangentCoord{b}, is, anchor);
    Eigen::PartialPivLU<RMat> lu(h);
    const double rc = lu.rcond();
    if (!(rc >= 1e-14))
      throw SolverFailure("newton_solve: Hessian numerically singular (rcond=" +
                          std::to_string(rc) + ") at iteration " + std::to_string(it));
    const RVec d = lu.solve(-detail::realify_coord(g.b));
    const CMat step = detail::unrealify_coord(d, n, m);
    tr.iterates.push_back({b, res, norm_one_inf(step)});
    if (opts.recenter) {
      anchor = retract(anchor, TangentCoord{b + step});
      b = CMat::Zero(n, m);
    } else {
      b += step;
    }
  }
  tr.final_point = opts.recenter ? anchor : retract(anchor, TangentCoord{b});
  return tr;
}

struct DisplacementCheck {
  double measured = 0;       // ||P_inf - P0||_{1,inf}
  double bound = 0;          // certificate displacement bound
  double r = 0;              // residual ball radius around the first iterate
  double tau_star_star = 0;  // uniqueness radius
  bool ball_contained = false;
  bool pass = false;
};

inline DisplacementCheck displacement_check(const GrassmannPoint& p_inf,
                                            const GrassmannPoint& p0,
                                            const KantorovichCertificate& cert) {
  if (p_inf.dim() != p0.dim()) throw InvalidInput("displacement_check: dimension mismatch");
  DisplacementCheck out;
  out.measured = norm_one_inf((p_inf.p - p0.p).eval());
  out.bound = cert.displacement_bound;
  out.r = cert.r;
  out.tau_star_star = cert.tau_star_star;
  out.ball_contained = cert.gates.eps_hat_gt_tau_star;
  out.pass = cert.valid && out.measured <= out.bound * (1.0 + 1e-12) + 1e-13;
  return out;
}

}  // namespace hfcert
