#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "credalboot/core.hpp"
#include "credalboot/gmm.hpp"

namespace credalboot {

struct FitConfig {
  int max_iter = 500;
  double rel_tol = 1e-8;
  int n_restarts = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iter < 1) throw Error(ErrorKind::invalid_argument, "max_iter must be >= 1");
    if (!(rel_tol > 0.0)) throw Error(ErrorKind::invalid_argument, "rel_tol must be > 0");
    if (n_restarts < 1) throw Error(ErrorKind::invalid_argument, "n_restarts must be >= 1");
  }
};

struct FitResult {
  MixtureParams params;
  double log_likelihood = 0.0;
  int n_iter = 0;
  double bic = 0.0;
  bool converged = false;
  /// Log-likelihood after each E-step of the winning restart.
  std::vector<double> log_likelihood_trace;
};

/// BIC with the "higher is better" sign: 2 loglik - nu log n.
inline double bic_score(double log_likelihood, ModelTag tag, int c, int d, int n) {
  return 2.0 * log_likelihood - free_parameter_count(tag, c, d) * std::log(static_cast<double>(n));
}

/// Responsibilities and total log-likelihood of `data` under `params`.
inline std::pair<PosteriorMatrix, double> e_step(const Dataset& data, const MixtureParams& params) {
  auto [post, log_dens] = posterior_matrix(data.rows(), params);
  return {std::move(post), log_dens.sum()};
}

/// Maximum-likelihood update under the covariance family `tag`.
inline MixtureParams m_step(const Dataset& data, const PosteriorMatrix& resp, ModelTag tag) {
  const int n = data.n();
  const int d = data.d();
  const int c = static_cast<int>(resp.cols());
  if (resp.rows() != n || c < 1) throw Error(ErrorKind::dimension, "responsibility matrix does not match the data");
  const Matrix& x = data.rows();

  const Vector counts = resp.colwise().sum().transpose();
  for (int k = 0; k < c; ++k)
    if (!(counts[k] > n * 1e-10)) throw Error(ErrorKind::empty_cluster, "component " + std::to_string(k) + " has no support");

  Vector weights = counts / static_cast<double>(n);
  weights /= weights.sum();
  std::vector<Vector> means(static_cast<std::size_t>(c));
  std::vector<Matrix> scatter(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) {
    means[k] = (x.transpose() * resp.col(k)) / counts[k];
    const Matrix centered = x.rowwise() - means[k].transpose();
    scatter[k] = centered.transpose() * (centered.array().colwise() * resp.col(k).array()).matrix();
  }

  std::vector<Matrix> covariances(static_cast<std::size_t>(c));
  switch (tag) {
    case ModelTag::EII: {
      double trace = 0.0;
      for (const auto& w : scatter) trace += w.trace();
      const Matrix sigma = (trace / (static_cast<double>(n) * d)) * Matrix::Identity(d, d);
      for (auto& s : covariances) s = sigma;
      break;
    }
    case ModelTag::EEE: {
      Matrix pooled = Matrix::Zero(d, d);
      for (const auto& w : scatter) pooled += w;
      pooled /= static_cast<double>(n);
      pooled = (0.5 * (pooled + pooled.transpose())).eval();
      for (auto& s : covariances) s = pooled;
      break;
    }
    case ModelTag::VVV:
      for (int k = 0; k < c; ++k) {
        covariances[k] = scatter[k] / counts[k];
        covariances[k] = (0.5 * (covariances[k] + covariances[k].transpose())).eval();
      }
      break;
  }
  return MixtureParams(std::move(weights), std::move(means), std::move(covariances), tag);
}

namespace detail {

/// k-means++ seeding followed by Lloyd iterations; returns hard labels.
inline std::vector<int> kmeans_labels(const Matrix& x, int c, std::mt19937_64& rng, int lloyd_iters = 25) {
  const Eigen::Index n = x.rows();
  Matrix centers(c, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  Vector dist2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < c; ++k) {
    const double total = dist2.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= dist2[i];
        if (target < 0.0 && dist2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      while (dist2[chosen] <= 0.0 && chosen > 0) --chosen;
    } else {
      chosen = pick(rng);
    }
    centers.row(k) = x.row(chosen);
    dist2 = dist2.cwiseMin((x.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < lloyd_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(c, x.cols());
    Vector counts = Vector::Zero(c);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      counts[labels[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int k = 0; k < c; ++k)
      if (counts[k] > 0) centers.row(k) = sums.row(k) / counts[k];
  }
  return labels;
}

inline PosteriorMatrix hard_responsibilities(std::span<const int> labels, int c) {
  PosteriorMatrix resp = PosteriorMatrix::Zero(static_cast<Eigen::Index>(labels.size()), c);
  for (std::size_t i = 0; i < labels.size(); ++i) resp(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return resp;
}

inline FitResult run_em(const Dataset& data, MixtureParams params, const FitConfig& config) {
  std::vector<double> trace;
  bool converged = false;
  int n_iter = 0;
  auto [resp, ll] = e_step(data, params);
  trace.push_back(ll);
  while (n_iter < config.max_iter) {
    MixtureParams next = m_step(data, resp, params.tag());
    // A floored covariance means a component collapsed onto a lower-dimensional set.
    if (next.floored()) throw Error(ErrorKind::degenerate_parameters, "component covariance collapsed at iteration " + std::to_string(n_iter + 1));
    auto [next_resp, next_ll] = e_step(data, next);
    ++n_iter;
    params = std::move(next);
    resp = std::move(next_resp);
    const double prev = ll;
    ll = next_ll;
    trace.push_back(ll);
    if (std::abs(ll - prev) / (std::abs(prev) + 1.0) < config.rel_tol) {
      converged = true;
      break;
    }
  }
  if (!std::isfinite(ll)) throw Error(ErrorKind::degenerate_parameters, "non-finite log-likelihood");
  const double bic = bic_score(ll, params.tag(), params.c(), params.d(), data.n());
  return FitResult{std::move(params), ll, n_iter, bic, converged, std::move(trace)};
}

}  // namespace detail

/// EM from seeded k-means++ starts; keeps the restart with the highest final
/// log-likelihood (earliest restart on ties).
inline FitResult fit_em(const Dataset& data, int c, ModelTag tag, const FitConfig& config) {
  config.validate();
  if (c < 1) throw Error(ErrorKind::invalid_argument, "number of clusters must be >= 1");
  if (data.n() < c) throw Error(ErrorKind::invalid_argument, "need at least as many observations as clusters");

  std::optional<FitResult> best;
  std::string diagnostics;
  for (int r = 0; r < config.n_restarts; ++r) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
    try {
      const auto labels = detail::kmeans_labels(data.rows(), c, rng);
      MixtureParams init = m_step(data, detail::hard_responsibilities(labels, c), tag);
      FitResult result = detail::run_em(data, std::move(init), config);
      if (!best || result.log_likelihood > best->log_likelihood) best = std::move(result);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::empty_cluster && e.kind() != ErrorKind::degenerate_parameters &&
          e.kind() != ErrorKind::posterior_undefined)
        throw;
      diagnostics += " [restart " + std::to_string(r) + ": " + e.what() + "]";
    }
  }
  if (!best) throw Error(ErrorKind::fit_failed, "all " + std::to_string(config.n_restarts) + " restarts failed:" + diagnostics);
  return std::move(*best);
}

/// Fits every candidate family and returns the highest-BIC fit; ties go to
/// the family with more free parameters.
inline FitResult select_model(const Dataset& data, int c, std::span<const ModelTag> candidates, const FitConfig& config) {
  if (candidates.empty()) throw Error(ErrorKind::invalid_argument, "no candidate models");
  std::optional<FitResult> best;
  std::string diagnostics;
  for (ModelTag tag : candidates) {
    try {
      FitResult fit = fit_em(data, c, tag, config);
      const bool better = !best || fit.bic > best->bic ||
                          (fit.bic == best->bic && free_parameter_count(tag, c, data.d()) >
                                                       free_parameter_count(best->params.tag(), c, data.d()));
      if (better) best = std::move(fit);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::fit_failed) throw;
      diagnostics += std::string(" [") + std::string(to_string(tag)) + ": " + e.what() + "]";
    }
  }
  if (!best) throw Error(ErrorKind::fit_failed, "every candidate model failed:" + diagnostics);
  return std::move(*best);
}

inline constexpr ModelTag kAllModelTags[] = {ModelTag::EII, ModelTag::EEE, ModelTag::VVV};

}  // namespace credalboot
