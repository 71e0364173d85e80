#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "credalboot/core.hpp"
#include "credalboot/credal.hpp"
#include "credalboot/gmm.hpp"

namespace credalboot {

/// s_kl = sum_i post_ik post_il (c x c, symmetric).
using ClusterSimilarity = Matrix;

inline ClusterSimilarity cluster_similarity(const PosteriorMatrix& post) {
  ClusterSimilarity s = post.transpose() * post;
  // Force exact symmetry.
  for (Eigen::Index k = 0; k < s.rows(); ++k)
    for (Eigen::Index l = k + 1; l < s.cols(); ++l) s(l, k) = s(k, l);
  return s;
}

/// Cluster pairs {k, l} (k < l, 0-based) that are mutual K-nearest neighbours
/// under s. Entries exactly equal to zero never count as neighbours.
inline std::vector<std::pair<int, int>> mutual_knn_pairs(const ClusterSimilarity& s, int K) {
  const int c = static_cast<int>(s.rows());
  if (s.cols() != c) throw Error(ErrorKind::dimension, "similarity matrix must be square");
  if (c < 2) throw Error(ErrorKind::invalid_argument, "need at least two clusters");
  if (K < 1) throw Error(ErrorKind::invalid_argument, "K must be >= 1");
  if (K >= c) throw Error(ErrorKind::invalid_argument, "K must be < c");

  std::vector<std::vector<bool>> neighbour(static_cast<std::size_t>(c), std::vector<bool>(static_cast<std::size_t>(c), false));
  for (int k = 0; k < c; ++k) {
    std::vector<int> order;
    for (int l = 0; l < c; ++l)
      if (l != k && s(k, l) > 0.0) order.push_back(l);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s(k, a) > s(k, b); });
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(K), order.size());
    for (std::size_t r = 0; r < take; ++r) neighbour[static_cast<std::size_t>(k)][static_cast<std::size_t>(order[r])] = true;
  }
  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < c; ++k)
    for (int l = k + 1; l < c; ++l)
      if (neighbour[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] && neighbour[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)])
        pairs.emplace_back(k, l);
  return pairs;
}

enum class FocalMode { singletons, singletons_pairs, mutual_knn };

inline std::optional<FocalMode> parse_focal_mode(std::string_view name) {
  if (name == "singletons") return FocalMode::singletons;
  if (name == "pairs" || name == "singletons_pairs") return FocalMode::singletons_pairs;
  if (name == "knn" || name == "mutual_knn") return FocalMode::mutual_knn;
  return std::nullopt;
}

inline std::string_view to_string(FocalMode mode) {
  switch (mode) {
    case FocalMode::singletons: return "singletons";
    case FocalMode::singletons_pairs: return "pairs";
    case FocalMode::mutual_knn: return "knn";
  }
  return "?";
}

struct FocalSpec {
  FocalMode mode = FocalMode::singletons_pairs;
  int K = 2;
  bool include_frame = false;
};

inline FocalSetFamily build_family(int c, const FocalSpec& spec, const ClusterSimilarity* similarity = nullptr) {
  if (c < 1) throw Error(ErrorKind::invalid_argument, "number of clusters must be >= 1");
  switch (spec.mode) {
    case FocalMode::singletons: {
      if (!spec.include_frame || c == 1) return FocalSetFamily::singletons(c);
      return FocalSetFamily::with_pairs(c, {}, true);
    }
    case FocalMode::singletons_pairs:
      return FocalSetFamily::singletons_and_pairs(c, spec.include_frame);
    case FocalMode::mutual_knn: {
      if (similarity == nullptr) throw Error(ErrorKind::invalid_argument, "mutual K-NN focal selection needs a similarity matrix");
      if (similarity->rows() != c) throw Error(ErrorKind::dimension, "similarity matrix does not match c");
      const auto pairs = mutual_knn_pairs(*similarity, spec.K);
      return FocalSetFamily::with_pairs(c, pairs, spec.include_frame);
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown focal mode");
}

}  // namespace credalboot
