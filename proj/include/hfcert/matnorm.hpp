#pragma once

// The 1/inf matrix norms, the weighted norm ||.||_{w,1,inf}, and weight
// matrices subject to condition (W):
//   (W)(i)  max_j sum_k w_jk^-1 <= 1
//   (W)(ii) w_jk^-1 w_kl^-1 <= w_jl^-1
// with w symmetric and w_jk >= 1 throughout.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hfcert/types.hpp"

namespace hfcert {

// ||A||_{1,inf} = max(largest absolute column sum, largest absolute row sum).
template <typename Derived>
double norm_one_inf(const Eigen::MatrixBase<Derived>& a) {
  if (!a.allFinite()) throw InvalidInput("norm_one_inf: non-finite entry");
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const auto abs = a.cwiseAbs().eval();
  return std::max(abs.colwise().sum().maxCoeff(), abs.rowwise().sum().maxCoeff());
}

struct WeightSet {
  RMat w;                                     // symmetric, entries >= 1
  std::vector<std::array<double, 3>> points;  // optional metadata
  Index dim() const { return w.rows(); }
};

struct WeightViolation {
  std::string clause;  // "symmetry", "entry>=1", "(W)(i)", "(W)(ii)"
  Index j = -1, k = -1, l = -1;
  double lhs = 0.0, rhs = 0.0;
};

struct WeightReport {
  std::vector<WeightViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks every clause of (W) with absolute slack 1e-12 per inequality.
inline WeightReport validate_weights(const WeightSet& ws, double slack = 1e-12) {
  const RMat& w = ws.w;
  WeightReport rep;
  if (w.rows() != w.cols()) {
    rep.violations.push_back({"symmetry", -1, -1, -1, double(w.rows()), double(w.cols())});
    return rep;
  }
  const Index n = w.rows();
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      if (std::abs(w(j, k) - w(k, j)) > slack)
        rep.violations.push_back({"symmetry", j, k, -1, w(j, k), w(k, j)});
      if (!(w(j, k) >= 1.0 - slack))
        rep.violations.push_back({"entry>=1", j, k, -1, w(j, k), 1.0});
    }
  for (Index j = 0; j < n; ++j) {
    const double row = w.row(j).cwiseInverse().sum();
    if (row > 1.0 + slack) rep.violations.push_back({"(W)(i)", j, -1, -1, row, 1.0});
  }
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      for (Index l = 0; l < n; ++l) {
        const double lhs = 1.0 / (w(j, k) * w(k, l));
        const double rhs = 1.0 / w(j, l);
        if (lhs > rhs + slack) rep.violations.push_back({"(W)(ii)", j, k, l, lhs, rhs});
      }
  return rep;
}

// ||A||_{w,1,inf} = ||(w_jk a_jk)||_{1,inf}.
template <typename Derived>
double norm_weighted(const Eigen::MatrixBase<Derived>& a, const WeightSet& ws) {
  if (a.rows() != ws.w.rows() || a.cols() != ws.w.cols())
    throw InvalidInput("norm_weighted: dimension mismatch");
  return norm_one_inf((ws.w.array() * a.array().abs()).matrix());
}

// w_jk = max(1, c |q_j - q_k|^s) off the diagonal, with a common diagonal
// value 1/(1 - m) where m is the largest off-diagonal inverse row sum, so
// that (W)(i) holds with equality on the worst row.  The scale c is the
// smallest value (64 bisection steps) for which that diagonal exists and is
// compatible with (W)(ii)'s w_jj <= w_jk^2.  The result is re-validated; an
// infeasible configuration (e.g. coincident points) raises.
inline WeightSet weights_from_points(const std::vector<std::array<double, 3>>& points,
                                     double s) {
  if (!(s > 1.0)) throw InvalidInput("weights_from_points: need exponent s > 1");
  const Index n = static_cast<Index>(points.size());
  if (n == 0) throw InvalidInput("weights_from_points: no points");
  for (const auto& p : points)
    for (double x : p)
      if (!std::isfinite(x)) throw InvalidInput("weights_from_points: non-finite point");

  RMat dist = RMat::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      const double dx = points[j][0] - points[k][0];
      const double dy = points[j][1] - points[k][1];
      const double dz = points[j][2] - points[k][2];
      dist(j, k) = std::sqrt(dx * dx + dy * dy + dz * dz);
    }

  WeightSet ws;
  ws.points = points;
  if (n == 1) {
    ws.w = RMat::Ones(1, 1);
    return ws;
  }

  auto build_offdiag = [&](double c) {
    RMat w = RMat::Ones(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k)
        if (j != k) w(j, k) = std::max(1.0, c * std::pow(dist(j, k), s));
    return w;
  };
  auto offdiag_mass = [&](const RMat& w) {
    double m = 0.0;
    for (Index j = 0; j < n; ++j) {
      double row = 0.0;
      for (Index k = 0; k < n; ++k)
        if (j != k) row += 1.0 / w(j, k);
      m = std::max(m, row);
    }
    return m;
  };
  // Feasibility of scale c: off-diagonal inverse row sums leave room for the
  // common diagonal 1/(1-m), and the completed matrix passes every (W)
  // clause (the triple clause is only eventually monotone once entries
  // unclamp, so it is checked in full).
  auto assemble = [&](double c) {
    RMat w = build_offdiag(c);
    const double m = offdiag_mass(w);
    if (m >= 1.0 - 1e-12) return RMat();
    w.diagonal().setConstant(1.0 / (1.0 - m));
    return w;
  };
  auto feasible = [&](double c) {
    const RMat w = assemble(c);
    if (w.size() == 0) return false;
    return validate_weights({w, {}}).ok();
  };

  double hi = 1.0;
  bool found = false;
  for (int i = 0; i < 200 && !found; ++i, hi *= 2.0) found = feasible(hi);
  if (!found)
    throw ConstructionFailed(
        "weights_from_points: no scale satisfies (W)(i) with an admissible diagonal");
  hi /= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }

  ws.w = assemble(hi);
  const WeightReport rep = validate_weights(ws);
  if (!rep.ok())
    throw ConstructionFailed("weights_from_points: constructed weights violate " +
                             rep.violations.front().clause);
  return ws;
}

}  // namespace hfcert
