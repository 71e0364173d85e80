#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "credalboot/core.hpp"

namespace credalboot {

/// Subset of the cluster frame {w_1, ..., w_c}; bit k stands for cluster k.
using FocalMask = std::uint32_t;

inline int cardinality(FocalMask mask) { return std::popcount(mask); }

/// Ordered list of nonempty focal sets over c clusters, kept in canonical
/// order: by cardinality, then by mask value.
class FocalSetFamily {
 public:
  static constexpr int kMaxClusters = 30;

  FocalSetFamily(int c, std::vector<FocalMask> sets) : c_(c), sets_(std::move(sets)) {
    if (c_ < 1 || c_ > kMaxClusters) throw Error(ErrorKind::invalid_argument, "cluster count out of range");
    if (sets_.empty()) throw Error(ErrorKind::invalid_argument, "focal set family is empty");
    const FocalMask frame = full_mask();
    for (FocalMask m : sets_) {
      if (m == 0) throw Error(ErrorKind::invalid_argument, "the empty set cannot be a focal set");
      if ((m & ~frame) != 0) throw Error(ErrorKind::invalid_argument, "focal set refers to a cluster outside the frame");
    }
    std::sort(sets_.begin(), sets_.end(), canonical_less);
    if (std::adjacent_find(sets_.begin(), sets_.end()) != sets_.end())
      throw Error(ErrorKind::invalid_argument, "duplicate focal set");
  }

  static FocalSetFamily singletons(int c) {
    std::vector<FocalMask> sets;
    for (int k = 0; k < c; ++k) sets.push_back(FocalMask{1} << k);
    return FocalSetFamily(c, std::move(sets));
  }

  /// Singletons plus the given cluster pairs (0-based), optionally with the whole frame.
  static FocalSetFamily with_pairs(int c, std::span<const std::pair<int, int>> pairs, bool include_frame = false) {
    std::vector<FocalMask> sets;
    for (int k = 0; k < c; ++k) sets.push_back(FocalMask{1} << k);
    for (auto [a, b] : pairs) {
      if (a == b || a < 0 || b < 0 || a >= c || b >= c) throw Error(ErrorKind::invalid_argument, "invalid cluster pair");
      sets.push_back((FocalMask{1} << a) | (FocalMask{1} << b));
    }
    const FocalMask frame = (FocalMask{1} << c) - 1;
    if (include_frame && std::find(sets.begin(), sets.end(), frame) == sets.end()) sets.push_back(frame);
    return FocalSetFamily(c, std::move(sets));
  }

  static FocalSetFamily singletons_and_pairs(int c, bool include_frame = false) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < c; ++a)
      for (int b = a + 1; b < c; ++b) pairs.emplace_back(a, b);
    return with_pairs(c, pairs, include_frame);
  }

  int c() const { return c_; }
  int f() const { return static_cast<int>(sets_.size()); }
  FocalMask full_mask() const { return (FocalMask{1} << c_) - 1; }
  FocalMask operator[](int k) const { return sets_[static_cast<std::size_t>(k)]; }
  const std::vector<FocalMask>& sets() const { return sets_; }

  /// Index of a focal set, or -1.
  int find(FocalMask m) const {
    const auto it = std::find(sets_.begin(), sets_.end(), m);
    return it == sets_.end() ? -1 : static_cast<int>(it - sets_.begin());
  }

  bool operator==(const FocalSetFamily& other) const { return c_ == other.c_ && sets_ == other.sets_; }

  static bool canonical_less(FocalMask a, FocalMask b) {
    const int ca = cardinality(a);
    const int cb = cardinality(b);
    return ca != cb ? ca < cb : a < b;
  }

 private:
  int c_;
  std::vector<FocalMask> sets_;
};

namespace detail {

inline constexpr double kMassClamp = 1e-12;
inline constexpr double kMassSumTol = 1e-10;

inline void clean_masses(std::span<double> m) {
  double total = 0.0;
  for (double& v : m) {
    if (!std::isfinite(v) || v < -kMassSumTol) throw Error(ErrorKind::invalid_argument, "mass values must be nonnegative");
    if (v < kMassClamp) v = 0.0;
    total += v;
  }
  if (std::abs(total - 1.0) > kMassSumTol) throw Error(ErrorKind::invalid_argument, "masses must sum to 1");
  // Leave rows that already sum to 1 up to rounding untouched, so cleaning is idempotent.
  if (std::abs(total - 1.0) > 1e-14)
    for (double& v : m) v /= total;
}

}  // namespace detail

/// Normalized mass function over the focal sets of a family.
class MassFunction {
 public:
  MassFunction(std::shared_ptr<const FocalSetFamily> family, std::vector<double> masses)
      : family_(std::move(family)), masses_(std::move(masses)) {
    if (!family_) throw Error(ErrorKind::invalid_argument, "mass function needs a focal set family");
    if (static_cast<int>(masses_.size()) != family_->f())
      throw Error(ErrorKind::dimension, "mass vector length does not match the focal set family");
    detail::clean_masses(masses_);
  }

  const FocalSetFamily& family() const { return *family_; }
  const std::shared_ptr<const FocalSetFamily>& family_ptr() const { return family_; }
  std::span<const double> masses() const { return masses_; }
  double operator[](int k) const { return masses_[static_cast<std::size_t>(k)]; }

  /// Mass of an arbitrary subset (0 when it is not in the family).
  double mass_of(FocalMask m) const {
    const int k = family_->find(m);
    return k < 0 ? 0.0 : masses_[static_cast<std::size_t>(k)];
  }

  double belief(FocalMask a) const {
    double s = 0.0;
    for (int k = 0; k < family_->f(); ++k)
      if (((*family_)[k] & ~a) == 0) s += masses_[static_cast<std::size_t>(k)];
    return s;
  }

  double plausibility(FocalMask a) const {
    double s = 0.0;
    for (int k = 0; k < family_->f(); ++k)
      if (((*family_)[k] & a) != 0) s += masses_[static_cast<std::size_t>(k)];
    return s;
  }

 private:
  std::shared_ptr<const FocalSetFamily> family_;
  std::vector<double> masses_;
};

/// Masses on {same cluster, different clusters, either} for one pair.
struct PairwiseMass {
  double m_same = 0.0;
  double m_diff = 0.0;
  double m_theta = 0.0;

  double bel() const { return m_same; }
  double pl() const { return m_same + m_theta; }
};

struct BelPl {
  double bel = 0.0;
  double pl = 0.0;
};

/// m_same = sum_k m_i({k}) m_j({k}); m_diff = sum over disjoint (A, B) of
/// m_i(A) m_j(B); m_theta is the remainder.
inline PairwiseMass pairwise_mass(const FocalSetFamily& family, std::span<const double> m_i, std::span<const double> m_j) {
  const auto f = static_cast<std::size_t>(family.f());
  if (m_i.size() != f || m_j.size() != f) throw Error(ErrorKind::dimension, "mass vectors do not match the family");
  PairwiseMass out;
  for (std::size_t a = 0; a < f; ++a) {
    if (m_i[a] == 0.0) continue;
    const FocalMask A = family[static_cast<int>(a)];
    for (std::size_t b = 0; b < f; ++b) {
      const FocalMask B = family[static_cast<int>(b)];
      const double prod = m_i[a] * m_j[b];
      if ((A & B) == 0) {
        out.m_diff += prod;
      } else if (a == b && cardinality(A) == 1) {
        out.m_same += prod;
      }
    }
  }
  out.m_theta = std::max(0.0, 1.0 - out.m_same - out.m_diff);
  return out;
}

inline PairwiseMass pairwise_mass(const MassFunction& m_i, const MassFunction& m_j) {
  if (!(m_i.family() == m_j.family())) throw Error(ErrorKind::invalid_argument, "mass functions are defined on different focal set families");
  return pairwise_mass(m_i.family(), m_i.masses(), m_j.masses());
}

inline BelPl pairwise_bel_pl(const PairwiseMass& pm) { return {pm.bel(), pm.pl()}; }

/// S (singleton diagonal) and C (disjointness) matrices over a family.
struct StructureMatrices {
  Matrix S;
  Matrix C;
};

inline StructureMatrices structure_matrices(const FocalSetFamily& family) {
  const int f = family.f();
  StructureMatrices out{Matrix::Zero(f, f), Matrix::Zero(f, f)};
  for (int k = 0; k < f; ++k) {
    if (cardinality(family[k]) == 1) out.S(k, k) = 1.0;
    for (int l = 0; l < f; ++l)
      if ((family[k] & family[l]) == 0) out.C(k, l) = 1.0;
  }
  return out;
}

/// n mass functions sharing one focal set family, stored as an n x f matrix.
class CredalPartition {
 public:
  CredalPartition(std::shared_ptr<const FocalSetFamily> family, Matrix masses)
      : family_(std::move(family)), masses_(std::move(masses)) {
    if (!family_) throw Error(ErrorKind::invalid_argument, "credal partition needs a focal set family");
    if (masses_.cols() != family_->f()) throw Error(ErrorKind::dimension, "mass matrix width does not match the family");
    if (masses_.rows() < 1) throw Error(ErrorKind::invalid_argument, "credal partition needs at least one object");
    for (Eigen::Index i = 0; i < masses_.rows(); ++i) {
      Vector row = masses_.row(i).transpose();
      detail::clean_masses(std::span<double>(row.data(), static_cast<std::size_t>(row.size())));
      masses_.row(i) = row.transpose();
    }
  }

  int n() const { return static_cast<int>(masses_.rows()); }
  int f() const { return family_->f(); }
  int c() const { return family_->c(); }
  const FocalSetFamily& family() const { return *family_; }
  const std::shared_ptr<const FocalSetFamily>& family_ptr() const { return family_; }
  const Matrix& masses() const { return masses_; }

  std::vector<double> row_vector(int i) const {
    std::vector<double> out(static_cast<std::size_t>(f()));
    for (int k = 0; k < f(); ++k) out[static_cast<std::size_t>(k)] = masses_(i, k);
    return out;
  }

  MassFunction mass_function(int i) const { return MassFunction(family_, row_vector(i)); }

 private:
  std::shared_ptr<const FocalSetFamily> family_;
  Matrix masses_;
};

/// Pairwise masses for all i < j, packed in lexicographic order.
inline std::vector<PairwiseMass> relational_representation(const CredalPartition& partition) {
  const int n = partition.n();
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows.push_back(partition.row_vector(i));
  std::vector<PairwiseMass> out;
  out.reserve(pair_count(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.push_back(pairwise_mass(partition.family(), rows[i], rows[j]));
  return out;
}

/// Hard assignment to the maximal-mass focal set, with the induced lower and
/// upper cluster approximations (object indices, 0-based).
struct RoughSummary {
  std::vector<FocalMask> hard_labels;
  std::vector<std::vector<int>> lower;
  std::vector<std::vector<int>> upper;
};

inline RoughSummary rough_summary(const CredalPartition& partition) {
  const int c = partition.c();
  RoughSummary out;
  out.lower.resize(static_cast<std::size_t>(c));
  out.upper.resize(static_cast<std::size_t>(c));
  const Matrix& m = partition.masses();
  for (int i = 0; i < partition.n(); ++i) {
    int best = 0;
    for (int k = 1; k < partition.f(); ++k)
      if (m(i, k) > m(i, best)) best = k;
    const FocalMask a = partition.family()[best];
    out.hard_labels.push_back(a);
    for (int k = 0; k < c; ++k) {
      if (a == (FocalMask{1} << k)) out.lower[static_cast<std::size_t>(k)].push_back(i);
      if ((a >> k) & 1U) out.upper[static_cast<std::size_t>(k)].push_back(i);
    }
  }
  return out;
}

}  // namespace credalboot
