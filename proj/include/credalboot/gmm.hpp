#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "credalboot/core.hpp"

namespace credalboot {

/// Covariance families: spherical equal volume, shared full covariance,
/// unconstrained per component.
enum class ModelTag { EII, EEE, VVV };

inline std::string_view to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::EII: return "EII";
    case ModelTag::EEE: return "EEE";
    case ModelTag::VVV: return "VVV";
  }
  return "?";
}

inline std::optional<ModelTag> parse_model_tag(std::string_view name) {
  std::string upper(name);
  for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (upper == "EII") return ModelTag::EII;
  if (upper == "EEE") return ModelTag::EEE;
  if (upper == "VVV") return ModelTag::VVV;
  return std::nullopt;
}

/// Number of free parameters of a c-component model in dimension d.
inline double free_parameter_count(ModelTag tag, int c, int d) {
  const double base = (c - 1) + static_cast<double>(c) * d;
  const double cov = d * (d + 1) / 2.0;
  switch (tag) {
    case ModelTag::EII: return base + 1;
    case ModelTag::EEE: return base + cov;
    case ModelTag::VVV: return base + c * cov;
  }
  return base;
}

/// n x d observation matrix; row i is object i.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(Matrix rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 1 || rows_.cols() < 1)
      throw Error(ErrorKind::invalid_argument, "dataset needs n >= 1 and d >= 1");
    if (!rows_.allFinite()) throw Error(ErrorKind::invalid_argument, "dataset contains non-finite values");
  }

  int n() const { return static_cast<int>(rows_.rows()); }
  int d() const { return static_cast<int>(rows_.cols()); }
  const Matrix& rows() const { return rows_; }
  auto row(int i) const { return rows_.row(i); }

  /// Rows picked by index, in the given order (indices may repeat).
  Dataset subset(std::span<const int> indices) const {
    Matrix out(static_cast<Eigen::Index>(indices.size()), rows_.cols());
    for (std::size_t k = 0; k < indices.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = rows_.row(indices[k]);
    return Dataset(std::move(out));
  }

 private:
  Matrix rows_;
};

/// n x c matrix of conditional class probabilities.
using PosteriorMatrix = Matrix;

namespace detail {

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kWeightTol = 1e-12;
inline constexpr double kFloorScale = 1e-8;
// Pivot ratio below which a Cholesky factor is treated as numerically singular.
inline constexpr double kPivotTol = 1e-13;

inline bool cholesky_ok(const Eigen::LLT<Matrix>& llt, const Matrix& sigma) {
  if (llt.info() != Eigen::Success) return false;
  const Matrix& l = llt.matrixLLT();
  const double scale = sigma.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) return false;
  for (Eigen::Index k = 0; k < l.rows(); ++k) {
    const double pivot = l(k, k) * l(k, k);
    if (!(pivot > kPivotTol * scale)) return false;
  }
  return true;
}

}  // namespace detail

/// Parameters of a c-component Gaussian mixture in R^d. Immutable once built;
/// Cholesky factors of the covariances are cached at construction.
class MixtureParams {
 public:
  MixtureParams(Vector weights, std::vector<Vector> means, std::vector<Matrix> covariances, ModelTag tag)
      : weights_(std::move(weights)), means_(std::move(means)), covariances_(std::move(covariances)), tag_(tag) {
    const auto c = static_cast<std::size_t>(weights_.size());
    if (c == 0) throw Error(ErrorKind::invalid_argument, "mixture needs at least one component");
    if (means_.size() != c || covariances_.size() != c)
      throw Error(ErrorKind::dimension, "weights, means and covariances disagree on the component count");
    const auto d = means_.front().size();
    if (d == 0) throw Error(ErrorKind::dimension, "zero-dimensional mixture");
    for (std::size_t k = 0; k < c; ++k) {
      if (means_[k].size() != d || covariances_[k].rows() != d || covariances_[k].cols() != d)
        throw Error(ErrorKind::dimension, "component " + std::to_string(k) + " has inconsistent dimension");
      if (!means_[k].allFinite() || !covariances_[k].allFinite())
        throw Error(ErrorKind::invalid_argument, "non-finite mixture parameter");
    }
    if ((weights_.array() < 0.0).any() || std::abs(weights_.sum() - 1.0) > detail::kWeightTol)
      throw Error(ErrorKind::invalid_argument, "mixture weights must be nonnegative and sum to 1");
    for (auto& sigma : covariances_) {
      const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
      const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
      if (asym > detail::kSymmetryTol * scale)
        throw Error(ErrorKind::invalid_argument, "covariance matrix is not symmetric");
      sigma = (0.5 * (sigma + sigma.transpose())).eval();
    }
    check_tag_constraints();
    factorize();
  }

  int c() const { return static_cast<int>(weights_.size()); }
  int d() const { return static_cast<int>(means_.front().size()); }
  ModelTag tag() const { return tag_; }
  const Vector& weights() const { return weights_; }
  const std::vector<Vector>& means() const { return means_; }
  const std::vector<Matrix>& covariances() const { return covariances_; }
  double weight(int k) const { return weights_[k]; }
  const Vector& mean(int k) const { return means_[k]; }
  const Matrix& covariance(int k) const { return covariances_[k]; }
  /// True when at least one covariance needed the positive-definiteness floor.
  bool floored() const { return floored_; }

  /// log N(x; mu_k, Sigma_k) for every row of `x` (n x d), as an n-vector.
  Vector component_log_pdf(const Matrix& x, int k) const {
    const Eigen::Index n = x.rows();
    Matrix centered = (x.rowwise() - means_[k].transpose()).transpose();
    chol_[k].matrixL().solveInPlace(centered);
    Vector out(n);
    const double constant = -0.5 * (d() * std::log(2.0 * std::numbers::pi) + log_det_[k]);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = constant - 0.5 * centered.col(i).squaredNorm();
    return out;
  }

  /// n x c matrix of log(pi_k) + log N(x_i; mu_k, Sigma_k).
  Matrix log_joint(const Matrix& x) const {
    if (x.cols() != d()) throw Error(ErrorKind::dimension, "observation dimension does not match the mixture");
    Matrix out(x.rows(), c());
    for (int k = 0; k < c(); ++k) {
      const double lw = weights_[k] > 0.0 ? std::log(weights_[k]) : -std::numeric_limits<double>::infinity();
      out.col(k) = component_log_pdf(x, k).array() + lw;
    }
    return out;
  }

  /// Same parameters with component labels permuted: new component k is old perm[k].
  MixtureParams permuted(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != c()) throw Error(ErrorKind::dimension, "permutation size mismatch");
    Vector w(c());
    std::vector<Vector> mu;
    std::vector<Matrix> sigma;
    for (int k = 0; k < c(); ++k) {
      w[k] = weights_[perm[k]];
      mu.push_back(means_[perm[k]]);
      sigma.push_back(covariances_[perm[k]]);
    }
    return MixtureParams(std::move(w), std::move(mu), std::move(sigma), tag_);
  }

 private:
  void check_tag_constraints() const {
    const Matrix& first = covariances_.front();
    const double scale = std::max(1.0, first.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    if (tag_ == ModelTag::EII) {
      const double lambda = first(0, 0);
      const Matrix expected = lambda * Matrix::Identity(d(), d());
      for (const auto& sigma : covariances_)
        if ((sigma - expected).cwiseAbs().maxCoeff() > tol)
          throw Error(ErrorKind::invalid_argument, "EII requires every covariance to equal lambda * I");
    } else if (tag_ == ModelTag::EEE) {
      for (const auto& sigma : covariances_)
        if ((sigma - first).cwiseAbs().maxCoeff() > tol)
          throw Error(ErrorKind::invalid_argument, "EEE requires all covariances to be equal");
    }
  }

  // Factorization failure gets one retry with eps*I, eps = 1e-8 * trace / d.
  void factorize() {
    chol_.reserve(covariances_.size());
    log_det_.reserve(covariances_.size());
    for (std::size_t k = 0; k < covariances_.size(); ++k) {
      Matrix& sigma = covariances_[k];
      Eigen::LLT<Matrix> llt(sigma);
      if (!detail::cholesky_ok(llt, sigma)) {
        const double eps = detail::kFloorScale * sigma.trace() / static_cast<double>(d());
        if (!(eps > 0.0)) throw Error(ErrorKind::degenerate_parameters, "singular covariance in component " + std::to_string(k));
        sigma.diagonal().array() += eps;
        llt.compute(sigma);
        if (!detail::cholesky_ok(llt, sigma))
          throw Error(ErrorKind::degenerate_parameters, "covariance of component " + std::to_string(k) + " is not positive definite");
        floored_ = true;
      }
      log_det_.push_back(2.0 * llt.matrixLLT().diagonal().array().log().sum());
      chol_.push_back(std::move(llt));
    }
  }

  Vector weights_;
  std::vector<Vector> means_;
  std::vector<Matrix> covariances_;
  ModelTag tag_;
  std::vector<Eigen::LLT<Matrix>> chol_;
  std::vector<double> log_det_;
  bool floored_ = false;
};

namespace detail {

inline double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

inline Matrix as_row(const Eigen::Ref<const Vector>& x) { return x.transpose(); }

}  // namespace detail

/// log of the mixture density at x.
inline double log_density(const Eigen::Ref<const Vector>& x, const MixtureParams& params) {
  if (!x.allFinite()) throw Error(ErrorKind::invalid_argument, "observation is not finite");
  const Matrix joint = params.log_joint(detail::as_row(x));
  return detail::log_sum_exp(joint.row(0));
}

/// Posterior class probabilities of each row of `x`, plus per-row log densities.
inline std::pair<PosteriorMatrix, Vector> posterior_matrix(const Matrix& x, const MixtureParams& params) {
  Matrix post = params.log_joint(x);
  Vector log_dens(x.rows());
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    const double lse = detail::log_sum_exp(post.row(i));
    if (!std::isfinite(lse)) throw Error(ErrorKind::posterior_undefined, "posterior undefined at x (row " + std::to_string(i) + ")");
    log_dens[i] = lse;
    post.row(i) = (post.row(i).array() - lse).exp();
    post.row(i) /= post.row(i).sum();
  }
  return {std::move(post), std::move(log_dens)};
}

inline Vector posterior(const Eigen::Ref<const Vector>& x, const MixtureParams& params) {
  if (!x.allFinite()) throw Error(ErrorKind::invalid_argument, "observation is not finite");
  return posterior_matrix(detail::as_row(x), params).first.row(0).transpose();
}

/// Probability that two objects share a class: sum_k post_i[k] * post_j[k].
inline double pairwise_prob(std::span<const double> post_i, std::span<const double> post_j) {
  if (post_i.size() != post_j.size()) throw Error(ErrorKind::dimension, "posterior vectors differ in length");
  double s = 0.0;
  for (std::size_t k = 0; k < post_i.size(); ++k) s += post_i[k] * post_j[k];
  return std::clamp(s, 0.0, 1.0);
}

inline double pairwise_prob(const Eigen::Ref<const Vector>& post_i, const Eigen::Ref<const Vector>& post_j) {
  return pairwise_prob(std::span<const double>(post_i.data(), static_cast<std::size_t>(post_i.size())),
                       std::span<const double>(post_j.data(), static_cast<std::size_t>(post_j.size())));
}

/// Packed P_ij for all i < j of a posterior matrix.
inline std::vector<double> pairwise_probabilities(const PosteriorMatrix& post) {
  const auto n = static_cast<std::size_t>(post.rows());
  std::vector<double> out(pair_count(n));
  std::size_t p = 0;
  for (Eigen::Index i = 0; i < post.rows(); ++i)
    for (Eigen::Index j = i + 1; j < post.rows(); ++j) out[p++] = std::clamp(post.row(i).dot(post.row(j)), 0.0, 1.0);
  return out;
}

/// Most probable component for each row (ties to the lower index).
inline std::vector<int> map_labels(const PosteriorMatrix& post) {
  std::vector<int> labels(static_cast<std::size_t>(post.rows()));
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    Eigen::Index best = 0;
    post.row(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

}  // namespace credalboot
