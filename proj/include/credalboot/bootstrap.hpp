#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "credalboot/core.hpp"
#include "credalboot/em.hpp"
#include "credalboot/gmm.hpp"

namespace credalboot {

struct BootstrapConfig {
  int B = 1000;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  int max_redraws_per_replicate = 10;
  unsigned threads = 1;

  void validate() const {
    if (B < 2) throw Error(ErrorKind::invalid_argument, "B must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
    if (max_redraws_per_replicate < 0) throw Error(ErrorKind::invalid_argument, "max_redraws_per_replicate must be >= 0");
  }
};

/// Lower/upper confidence bounds and point estimates for every pair i < j,
/// packed in lexicographic order (see pair_index).
struct PairwiseIntervalMatrix {
  int n = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> point;

  std::size_t size() const { return lower.size(); }
  double lower_at(int i, int j) const { return lower[pair_index(i, j, n)]; }
  double upper_at(int i, int j) const { return upper[pair_index(i, j, n)]; }
  double point_at(int i, int j) const { return point[pair_index(i, j, n)]; }
  double width_at(int i, int j) const { return upper_at(i, j) - lower_at(i, j); }
};

/// n draws from {0, ..., n-1} with replacement.
template <typename Rng>
std::vector<int> resample_indices(int n, Rng& rng) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "cannot resample an empty dataset");
  std::uniform_int_distribution<int> draw(0, n - 1);
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (auto& v : idx) v = draw(rng);
  return idx;
}

namespace detail {

inline double sorted_percentile(std::span<const double> v, double p) {
  const double h = static_cast<double>(v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

}  // namespace detail

/// Linearly interpolated order statistic at level p: h = (B-1) p.
inline double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::invalid_argument, "percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::invalid_argument, "percentile level must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return detail::sorted_percentile(v, p);
}

/// Posterior matrices of the original objects under each replicate's fit.
/// P_ij for replicate b is recomputed on demand, so memory is O(B n c)
/// rather than O(B n^2).
class BootstrapReplicates {
 public:
  BootstrapReplicates(int n, std::vector<PosteriorMatrix> posteriors, std::vector<int> redraws)
      : n_(n), posteriors_(std::move(posteriors)), redraws_(std::move(redraws)) {}

  int n() const { return n_; }
  int B() const { return static_cast<int>(posteriors_.size()); }
  const PosteriorMatrix& posterior(int b) const { return posteriors_[static_cast<std::size_t>(b)]; }
  /// Number of failed fits that were redrawn for replicate b.
  int redraws(int b) const { return redraws_[static_cast<std::size_t>(b)]; }

  double value(int b, int i, int j) const {
    const auto& post = posteriors_[static_cast<std::size_t>(b)];
    return std::clamp(post.row(i).dot(post.row(j)), 0.0, 1.0);
  }

  /// P_ij(theta_b) for all pairs of replicate b, lexicographic order.
  std::vector<double> replicate_row(int b) const { return pairwise_probabilities(posterior(b)); }

  /// P_ij(theta_b) for b = 0..B-1.
  void pair_values(int i, int j, std::vector<double>& out) const {
    out.resize(posteriors_.size());
    for (std::size_t b = 0; b < posteriors_.size(); ++b) out[b] = value(static_cast<int>(b), i, j);
  }

  /// Replicate matrix as little-endian float64, row = replicate, column = pair.
  void dump(std::ostream& os) const {
    for (int b = 0; b < B(); ++b) {
      for (double v : replicate_row(b)) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
        char buf[8];
        std::memcpy(buf, &bits, 8);
        os.write(buf, 8);
      }
    }
  }

 private:
  static std::uint64_t byteswap64(std::uint64_t x) {
    std::uint64_t r = 0;
    for (int k = 0; k < 8; ++k) r = (r << 8) | ((x >> (8 * k)) & 0xffU);
    return r;
  }

  int n_;
  std::vector<PosteriorMatrix> posteriors_;
  std::vector<int> redraws_;
};

/// Fits B bootstrap replicates. Replicate b draws from its own seed stream
/// derive_seed(seed, b), so output does not depend on the worker count.
inline BootstrapReplicates run_bootstrap(const Dataset& data, int c, ModelTag tag, const FitConfig& fit_config,
                                         const BootstrapConfig& bconfig) {
  bconfig.validate();
  fit_config.validate();
  if (data.n() < c) throw Error(ErrorKind::invalid_argument, "need at least as many observations as clusters");
  std::vector<PosteriorMatrix> posteriors(static_cast<std::size_t>(bconfig.B));
  std::vector<int> redraws(static_cast<std::size_t>(bconfig.B), 0);

  parallel_for(static_cast<std::size_t>(bconfig.B), bconfig.threads, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(bconfig.seed, b));
    std::string last_error;
    for (int attempt = 0; attempt <= bconfig.max_redraws_per_replicate; ++attempt) {
      const auto idx = resample_indices(data.n(), rng);
      FitConfig cfg = fit_config;
      cfg.seed = derive_seed(bconfig.seed, b, static_cast<std::uint64_t>(attempt) + 1);
      try {
        const FitResult fit = fit_em(data.subset(idx), c, tag, cfg);
        posteriors[b] = posterior_matrix(data.rows(), fit.params).first;
        redraws[b] = attempt;
        return;
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::invalid_argument) throw;
        last_error = e.what();
      }
    }
    throw Error(ErrorKind::bootstrap_exhausted,
                "replicate " + std::to_string(b) + " failed after " + std::to_string(bconfig.max_redraws_per_replicate) +
                    " redraws (last: " + last_error + ")");
  });
  return BootstrapReplicates(data.n(), std::move(posteriors), std::move(redraws));
}

/// Percentile intervals at alpha/2 and 1 - alpha/2 for every pair.
inline PairwiseIntervalMatrix percentile_intervals(const BootstrapReplicates& reps, double alpha,
                                                   std::vector<double> point) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  const int n = reps.n();
  const std::size_t pairs = pair_count(static_cast<std::size_t>(n));
  if (point.size() != pairs) throw Error(ErrorKind::dimension, "point estimate vector has the wrong size");
  PairwiseIntervalMatrix out{n, std::vector<double>(pairs), std::vector<double>(pairs), std::move(point)};
  std::vector<double> values;
  std::size_t p = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++p) {
      reps.pair_values(i, j, values);
      std::sort(values.begin(), values.end());
      out.lower[p] = detail::sorted_percentile(values, alpha / 2.0);
      out.upper[p] = detail::sorted_percentile(values, 1.0 - alpha / 2.0);
    }
  }
  return out;
}

/// Bootstrap percentile intervals on all pairwise probabilities. `point` is
/// filled from `original_fit` evaluated on the original data.
inline PairwiseIntervalMatrix bootstrap_pairwise_ci(const Dataset& data, const MixtureParams& original_fit,
                                                    const FitConfig& fit_config, const BootstrapConfig& bconfig) {
  const auto reps = run_bootstrap(data, original_fit.c(), original_fit.tag(), fit_config, bconfig);
  auto point = pairwise_probabilities(posterior_matrix(data.rows(), original_fit).first);
  return percentile_intervals(reps, bconfig.alpha, std::move(point));
}

/// Convenience overload that also fits the original data.
inline PairwiseIntervalMatrix bootstrap_pairwise_ci(const Dataset& data, int c, ModelTag tag,
                                                    const FitConfig& fit_config, const BootstrapConfig& bconfig) {
  const FitResult fit = fit_em(data, c, tag, fit_config);
  return bootstrap_pairwise_ci(data, fit.params, fit_config, bconfig);
}

}  // namespace credalboot
