#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "credalboot/core.hpp"

namespace credalboot {

/// minimize m'Qm + u'm  subject to  1'm = 1, m >= 0.
struct SimplexQP {
  Matrix Q;
  Vector u;

  int f() const { return static_cast<int>(u.size()); }
  double objective(const Vector& m) const { return m.dot(Q * m) + u.dot(m); }
};

struct QPSolution {
  Vector m;
  double objective = 0.0;
  /// Coordinates held at zero by the final working set.
  std::vector<int> active_set;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Ridge added to Q when the reduced systems were singular (0 if none).
  double ridge = 0.0;
};

/// Scaled natural residual of the KKT system at a feasible m.
///
/// With g = 2Qm + u and lambda = -m'g, the multipliers of the bounds are
/// mu = g + lambda 1; the residual is max_k |min(m_k, mu_k)| / (1 + |g|_inf),
/// together with the primal equality violation.
inline double kkt_residual(const SimplexQP& qp, const Vector& m) {
  const Vector g = 2.0 * (qp.Q * m) + qp.u;
  const double lambda = -m.dot(g);
  double r = std::abs(m.sum() - 1.0);
  const double scale = 1.0 + g.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    const double mu = g[k] + lambda;
    r = std::max(r, std::abs(std::min(m[k], mu / scale)));
  }
  return r;
}

namespace detail {

// Minimizer of the QP restricted to the free coordinates with 1'm = 1 and all
// other coordinates at zero. Returns false if the KKT matrix is singular.
inline bool solve_equality_subproblem(const Matrix& hessian, const Vector& u, const std::vector<int>& free, Vector& out) {
  const auto nf = static_cast<Eigen::Index>(free.size());
  Matrix kkt = Matrix::Zero(nf + 1, nf + 1);
  Vector rhs(nf + 1);
  for (Eigen::Index a = 0; a < nf; ++a) {
    for (Eigen::Index b = 0; b < nf; ++b) kkt(a, b) = hessian(free[a], free[b]);
    kkt(a, nf) = 1.0;
    kkt(nf, a) = 1.0;
    rhs[a] = -u[free[a]];
  }
  rhs[nf] = 1.0;
  Eigen::FullPivLU<Matrix> lu(kkt);
  const double scale = std::max(1.0, kkt.cwiseAbs().maxCoeff());
  lu.setThreshold(1e-14 * scale);
  if (!lu.isInvertible()) return false;
  const Vector sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;
  out = Vector::Zero(u.size());
  for (Eigen::Index a = 0; a < nf; ++a) out[free[a]] = sol[a];
  return true;
}

inline bool feasible_solve(const Matrix& hessian, const Vector& u, const std::vector<int>& free, Vector& target,
                           double ridge_value, double& ridge_used) {
  if (solve_equality_subproblem(hessian, u, free, target)) return true;
  Matrix ridged = hessian;
  ridged.diagonal().array() += 2.0 * ridge_value;
  if (solve_equality_subproblem(ridged, u, free, target)) {
    ridge_used = ridge_value;
    return true;
  }
  return false;
}

}  // namespace detail

/// Primal active-set solver for the simplex-constrained convex QP.
///
/// Starts from the best vertex; on each iteration either steps toward the
/// minimizer over the current free face (adding the first blocking bound,
/// smallest index on ties) or releases the bound with the most negative
/// multiplier. Exact in finitely many steps for convex Q.
inline QPSolution solve(const SimplexQP& input, double tol = 1e-10) {
  const int f = input.f();
  if (f < 1) throw Error(ErrorKind::invalid_argument, "QP dimension must be >= 1");
  if (input.Q.rows() != f || input.Q.cols() != f) throw Error(ErrorKind::dimension, "Q and u disagree on the dimension");
  if (!input.Q.allFinite() || !input.u.allFinite()) throw Error(ErrorKind::invalid_argument, "QP data must be finite");
  const double qscale = std::max(1.0, input.Q.cwiseAbs().maxCoeff());
  if ((input.Q - input.Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * qscale)
    throw Error(ErrorKind::invalid_argument, "Q must be symmetric");

  // The argmin is invariant under positive scaling; work on data of unit size.
  const double data_scale = std::max(input.Q.cwiseAbs().maxCoeff(), input.u.cwiseAbs().maxCoeff());
  const double inv = data_scale > 0.0 ? 1.0 / data_scale : 1.0;
  const SimplexQP qp{inv * input.Q, inv * input.u};

  QPSolution sol;
  if (f == 1) {
    sol.m = Vector::Ones(1);
    sol.objective = input.objective(sol.m);
    sol.kkt_residual = kkt_residual(input, sol.m);
    return sol;
  }

  const Matrix hessian = qp.Q + qp.Q.transpose();  // 2Q, symmetrized
  const double trace = qp.Q.trace();
  const double ridge_value = trace > 0.0 ? 1e-12 * trace / f : 1e-12;

  // Best vertex start.
  int start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < f; ++k) {
    const double v = qp.Q(k, k) + qp.u[k];
    if (v < best) {
      best = v;
      start = k;
    }
  }
  Vector m = Vector::Zero(f);
  m[start] = 1.0;
  std::vector<bool> active(static_cast<std::size_t>(f), true);
  active[static_cast<std::size_t>(start)] = false;

  const int max_iter = 20 * f + 100;
  Vector target;
  for (int iter = 0; iter < max_iter; ++iter) {
    sol.iterations = iter + 1;
    std::vector<int> free;
    for (int k = 0; k < f; ++k)
      if (!active[static_cast<std::size_t>(k)]) free.push_back(k);

    if (!detail::feasible_solve(hessian, qp.u, free, target, ridge_value, sol.ridge))
      throw Error(ErrorKind::solver_stalled, "singular reduced KKT system");

    const Vector step = target - m;
    if (step.cwiseAbs().maxCoeff() <= 1e-12) {
      // Stationary on the current face: check the bound multipliers.
      const Vector g = hessian * m + qp.u;
      double lambda = 0.0;
      for (int k : free) lambda -= g[k];
      lambda /= static_cast<double>(free.size());
      int release = -1;
      // Threshold in the units of kkt_residual on the caller's data.
      const double out_scale = data_scale > 0.0 ? data_scale : 1.0;
      double most_negative = -tol * (1.0 + out_scale * g.cwiseAbs().maxCoeff()) / out_scale;
      for (int k = 0; k < f; ++k) {
        if (!active[static_cast<std::size_t>(k)]) continue;
        const double mu = g[k] + lambda;
        if (mu < most_negative) {
          most_negative = mu;
          release = k;
        }
      }
      if (release < 0) break;
      active[static_cast<std::size_t>(release)] = false;
      continue;
    }

    // Ratio test over free coordinates that decrease.
    double alpha = 1.0;
    int blocking = -1;
    for (int k : free) {
      if (step[k] < 0.0) {
        const double ratio = -m[k] / step[k];
        if (ratio < alpha) {
          alpha = ratio;
          blocking = k;
        }
      }
    }
    m += alpha * step;
    if (blocking >= 0) {
      m[blocking] = 0.0;
      active[static_cast<std::size_t>(blocking)] = true;
    } else {
      m = target;
    }
    if (iter + 1 == max_iter) {
      throw Error(ErrorKind::solver_stalled, "iteration budget exhausted (residual " + std::to_string(kkt_residual(qp, m)) + ")");
    }
  }

  for (Eigen::Index k = 0; k < m.size(); ++k)
    if (m[k] < 0.0) m[k] = 0.0;
  m /= m.sum();
  sol.m = m;
  sol.objective = input.objective(m);
  for (int k = 0; k < f; ++k)
    if (active[static_cast<std::size_t>(k)]) sol.active_set.push_back(k);
  sol.kkt_residual = kkt_residual(input, m);
  sol.ridge *= data_scale > 0.0 ? data_scale : 1.0;
  if (!(sol.kkt_residual <= std::max(tol, 1e-9)))
    throw Error(ErrorKind::solver_stalled, "KKT residual " + std::to_string(sol.kkt_residual) + " above tolerance");
  return sol;
}

}  // namespace credalboot
