#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "credalboot/bootstrap.hpp"
#include "credalboot/core.hpp"
#include "credalboot/credal.hpp"
#include "credalboot/qp_simplex.hpp"

namespace credalboot {

/// Target pairwise masses m*_ij = (P^l_ij, 1 - P^u_ij) for all i < j.
class TargetPairs {
 public:
  TargetPairs(int n, std::vector<double> same, std::vector<double> diff)
      : n_(n), same_(std::move(same)), diff_(std::move(diff)) {
    if (n_ < 2) throw Error(ErrorKind::invalid_argument, "targets need at least two objects");
    const std::size_t pairs = pair_count(static_cast<std::size_t>(n_));
    if (same_.size() != pairs || diff_.size() != pairs) throw Error(ErrorKind::dimension, "target vector has the wrong size");
    for (std::size_t p = 0; p < pairs; ++p) {
      if (!(same_[p] >= 0.0 && same_[p] <= 1.0 && diff_[p] >= 0.0 && diff_[p] <= 1.0) || same_[p] + diff_[p] > 1.0 + 1e-12)
        throw Error(ErrorKind::invalid_argument, "target pair " + std::to_string(p) + " is not a valid pairwise mass");
    }
  }

  static TargetPairs from_intervals(const PairwiseIntervalMatrix& ci) {
    std::vector<double> same(ci.size());
    std::vector<double> diff(ci.size());
    for (std::size_t p = 0; p < ci.size(); ++p) {
      same[p] = ci.lower[p];
      diff[p] = 1.0 - ci.upper[p];
    }
    return TargetPairs(ci.n, std::move(same), std::move(diff));
  }

  int n() const { return n_; }
  double same(int i, int j) const { return same_[pair_index(i, j, n_)]; }
  double diff(int i, int j) const { return diff_[pair_index(i, j, n_)]; }
  double same_at(std::size_t p) const { return same_[p]; }
  double diff_at(std::size_t p) const { return diff_[p]; }

 private:
  int n_;
  std::vector<double> same_;
  std::vector<double> diff_;
};

struct IrqpConfig {
  double epsilon = 1e-6;
  double rho = 0.5;
  int max_sweeps = 200;
  std::uint64_t seed = 0;
  int n_starts = 1;
  double qp_tol = 1e-10;
  /// Cross-check the direct and vectorized objectives after every sweep.
  bool verify_objective = false;
  std::shared_ptr<const FocalSetFamily> family;

  void validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorKind::invalid_argument, "rho must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be > 0");
    if (max_sweeps < 1) throw Error(ErrorKind::invalid_argument, "max_sweeps must be >= 1");
    if (n_starts < 1) throw Error(ErrorKind::invalid_argument, "n_starts must be >= 1");
    if (!family) throw Error(ErrorKind::invalid_argument, "IRQP needs a focal set family");
  }
};

struct IrqpTrace {
  /// J after each sweep; entry 0 is the value at the random start.
  std::vector<double> J_values;
  /// Running relative change; entry 0 is the initial value 1.
  std::vector<double> e_values;
  int n_sweeps = 0;
  bool converged = false;
};

/// Squared distance between pairwise masses and targets, summed over i < j,
/// computed from the direct pairwise mass formulas.
inline double objective_J(const CredalPartition& partition, const TargetPairs& targets) {
  if (partition.n() != targets.n()) throw Error(ErrorKind::dimension, "partition and targets disagree on n");
  const auto rel = relational_representation(partition);
  double J = 0.0;
  for (std::size_t p = 0; p < rel.size(); ++p) {
    const double a = rel[p].m_same - targets.same_at(p);
    const double b = rel[p].m_diff - targets.diff_at(p);
    J += a * a + b * b;
  }
  return J;
}

/// Same objective through m_ij = A_j B m_i, with A_j = I_2 (x) m_j' and B = [S; C].
inline double objective_J_vectorized(const CredalPartition& partition, const TargetPairs& targets) {
  if (partition.n() != targets.n()) throw Error(ErrorKind::dimension, "partition and targets disagree on n");
  const auto [S, C] = structure_matrices(partition.family());
  const int f = partition.f();
  Matrix B(2 * f, f);
  B << S, C;
  const Matrix& M = partition.masses();
  double J = 0.0;
  for (int i = 0; i < partition.n(); ++i) {
    const Vector Bm = B * M.row(i).transpose();
    for (int j = i + 1; j < partition.n(); ++j) {
      Matrix A = Matrix::Zero(2, 2 * f);
      A.block(0, 0, 1, f) = M.row(j);
      A.block(1, f, 1, f) = M.row(j);
      Vector r = A * Bm;
      r[0] -= targets.same(i, j);
      r[1] -= targets.diff(i, j);
      J += r.squaredNorm();
    }
  }
  return J;
}

struct RowQP {
  SimplexQP qp;
  /// Constant a_i = sum_j |m*_ij|^2, so that J_i(m) = m'Qm + u'm + a_i.
  double constant = 0.0;
};

namespace detail {

// Rows of M S and M C; row j holds (S m_j)' and (C m_j)'.
struct ProjectedMasses {
  Matrix MS;
  Matrix MC;
};

inline ProjectedMasses project(const Matrix& masses, const StructureMatrices& sc) {
  return {masses * sc.S, masses * sc.C};
}

inline RowQP assemble_row(const ProjectedMasses& pm, const TargetPairs& targets, int i) {
  const int n = static_cast<int>(pm.MS.rows());
  const int f = static_cast<int>(pm.MS.cols());
  Matrix V(2 * (n - 1), f);
  Vector w(2 * (n - 1));
  double constant = 0.0;
  int r = 0;
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const double ts = targets.same(i, j);
    const double td = targets.diff(i, j);
    V.row(r) = pm.MS.row(j);
    w[r++] = ts;
    V.row(r) = pm.MC.row(j);
    w[r++] = td;
    constant += ts * ts + td * td;
  }
  RowQP out;
  out.qp.Q = Matrix::Zero(f, f);
  out.qp.Q.selfadjointView<Eigen::Lower>().rankUpdate(V.transpose());
  out.qp.Q = Matrix(out.qp.Q.selfadjointView<Eigen::Lower>());
  out.qp.u = -2.0 * (V.transpose() * w);
  out.constant = constant;
  return out;
}

inline double objective_fast(const Matrix& masses, const ProjectedMasses& pm, const TargetPairs& targets) {
  const int n = static_cast<int>(masses.rows());
  const Matrix same = masses * pm.MS.transpose();
  const Matrix diff = masses * pm.MC.transpose();
  double J = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double a = same(j, i) - targets.same(i, j);
      const double b = diff(j, i) - targets.diff(i, j);
      J += a * a + b * b;
    }
  return J;
}

inline Matrix random_masses(int n, int f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  Matrix m(n, f);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < f; ++k) m(i, k) = expo(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

}  // namespace detail

/// Row QP for object i with all other rows fixed: Q_i = sum_j B'A_j'A_j B,
/// u_i = -2 sum_j m*_ij' A_j B.
inline RowQP assemble_row_qp(const CredalPartition& partition, const TargetPairs& targets, int i) {
  if (partition.n() != targets.n()) throw Error(ErrorKind::dimension, "partition and targets disagree on n");
  if (i < 0 || i >= partition.n()) throw Error(ErrorKind::invalid_argument, "row index out of range");
  const auto sc = structure_matrices(partition.family());
  return detail::assemble_row(detail::project(partition.masses(), sc), targets, i);
}

/// Iterative row-wise quadratic programming: block coordinate descent on J
/// with one simplex QP per object, cycling i = 0..n-1 until the running
/// relative change drops below epsilon.
inline std::pair<CredalPartition, IrqpTrace> irqp_fit(const TargetPairs& targets, const IrqpConfig& config) {
  config.validate();
  const int n = targets.n();
  const int f = config.family->f();
  const auto sc = structure_matrices(*config.family);

  std::optional<std::pair<Matrix, IrqpTrace>> best;
  for (int start = 0; start < config.n_starts; ++start) {
    Matrix masses = detail::random_masses(n, f, derive_seed(config.seed, static_cast<std::uint64_t>(start)));
    auto pm = detail::project(masses, sc);
    IrqpTrace trace;
    double J_prev = detail::objective_fast(masses, pm, targets);
    double e = 1.0;
    trace.J_values.push_back(J_prev);
    trace.e_values.push_back(e);
    if (J_prev == 0.0) trace.converged = true;

    while (!trace.converged && trace.n_sweeps < config.max_sweeps) {
      for (int i = 0; i < n; ++i) {
        const RowQP row = detail::assemble_row(pm, targets, i);
        QPSolution sol;
        try {
          sol = solve(row.qp, config.qp_tol);
        } catch (const Error& err) {
          throw Error("row " + std::to_string(i) + ": ", err);
        }
        // Keep the current row if the solve is not an improvement (round-off).
        const Vector current = masses.row(i).transpose();
        if (row.qp.objective(sol.m) <= row.qp.objective(current)) {
          masses.row(i) = sol.m.transpose();
          pm.MS.row(i) = sol.m.transpose() * sc.S;
          pm.MC.row(i) = sol.m.transpose() * sc.C;
        }
      }
      ++trace.n_sweeps;
      const double J = detail::objective_fast(masses, pm, targets);
      if (config.verify_objective) {
        const CredalPartition snapshot(config.family, masses);
        const double direct = objective_J(snapshot, targets);
        const double vec = objective_J_vectorized(snapshot, targets);
        if (std::abs(direct - vec) > 1e-10 * (1.0 + std::abs(direct)))
          throw Error(ErrorKind::solver_stalled, "objective forms disagree after sweep " + std::to_string(trace.n_sweeps));
      }
      trace.J_values.push_back(J);
      if (J_prev == 0.0) {
        trace.converged = true;
      } else {
        e = config.rho * e + (1.0 - config.rho) * std::abs(J - J_prev) / J_prev;
        if (e < config.epsilon) trace.converged = true;
      }
      trace.e_values.push_back(e);
      J_prev = J;
    }
    if (!best || trace.J_values.back() < best->second.J_values.back()) best.emplace(std::move(masses), std::move(trace));
  }
  return {CredalPartition(config.family, std::move(best->first)), std::move(best->second)};
}

/// "sweep,J,e" rows, one per trace entry.
inline void write_trace_csv(std::ostream& os, const IrqpTrace& trace) {
  os << "sweep,J,e\n";
  char buf[128];
  for (std::size_t t = 0; t < trace.J_values.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t, trace.J_values[t], trace.e_values[t]);
    os << buf;
  }
}

}  // namespace credalboot
