#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "random_instances.hpp"

using namespace credalboot;

namespace {

// Naive density: explicit determinant and inverse.
double naive_pdf(const Vector& x, const Vector& mu, const Matrix& sigma) {
  const int d = static_cast<int>(x.size());
  const Vector r = x - mu;
  const double q = r.dot(sigma.inverse() * r);
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * std::numbers::pi, d) * sigma.determinant());
}

double naive_mixture(const Vector& x, const MixtureParams& p) {
  double s = 0.0;
  for (int k = 0; k < p.c(); ++k) s += p.weight(k) * naive_pdf(x, p.mean(k), p.covariance(k));
  return s;
}

Vector naive_posterior(const Vector& x, const MixtureParams& p) {
  Vector out(p.c());
  for (int k = 0; k < p.c(); ++k) out[k] = p.weight(k) * naive_pdf(x, p.mean(k), p.covariance(k));
  return out / out.sum();
}

MixtureParams one_dim(std::vector<double> w, std::vector<double> mu, double var) {
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (double m : mu) {
    means.push_back(Vector::Constant(1, m));
    covs.push_back(Matrix::Constant(1, 1, var));
  }
  return MixtureParams(Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size())), means, covs, ModelTag::EII);
}

}  // namespace

TEST(LogDensity, StandardNormalAtMode) {
  const auto p = one_dim({1.0}, {0.0}, 1.0);
  EXPECT_NEAR(log_density(Vector::Zero(1), p), std::log(1.0 / std::sqrt(2.0 * std::numbers::pi)), 1e-14);
  EXPECT_NEAR(log_density(Vector::Zero(1), p), -0.91894, 1e-5);
}

TEST(LogDensity, IdenticalComponentsCollapse) {
  const auto one = one_dim({1.0}, {0.3}, 2.0);
  const auto two = one_dim({0.5, 0.5}, {0.3, 0.3}, 2.0);
  for (double x : {-2.0, 0.0, 0.3, 4.0}) EXPECT_NEAR(log_density(Vector::Constant(1, x), one), log_density(Vector::Constant(1, x), two), 1e-14);
}

TEST(LogDensity, MatchesNaiveSummation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = testutil::random_params(3, 2, ModelTag::VVV, rng);
    const Matrix x = testutil::random_points(10, 2, rng, 1.5);
    for (int i = 0; i < x.rows(); ++i) {
      const Vector xi = x.row(i).transpose();
      EXPECT_NEAR(log_density(xi, p), std::log(naive_mixture(xi, p)), 1e-10);
    }
  }
}

TEST(LogDensity, EqualsLogSumExpOfJoint) {
  std::mt19937_64 rng(12);
  const auto p = testutil::random_params(4, 3, ModelTag::EEE, rng);
  const Matrix x = testutil::random_points(15, 3, rng);
  const Matrix joint = p.log_joint(x);
  for (int i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (int k = 0; k < p.c(); ++k) s += std::exp(joint(i, k));
    EXPECT_NEAR(log_density(x.row(i).transpose(), p), std::log(s), 1e-10);
  }
}

TEST(Posterior, SymmetricMidpoint) {
  const auto p = one_dim({0.5, 0.5}, {-1.0, 1.0}, 1.0);
  const Vector post = posterior(Vector::Zero(1), p);
  EXPECT_NEAR(post[0], 0.5, 1e-15);
  EXPECT_NEAR(post[1], 0.5, 1e-15);
}

TEST(Posterior, DegeneratePrior) {
  const auto p = one_dim({1.0, 0.0}, {-1.0, 1.0}, 1.0);
  for (double x : {-5.0, 0.0, 1.0, 7.0}) {
    const Vector post = posterior(Vector::Constant(1, x), p);
    EXPECT_EQ(post[0], 1.0);
    EXPECT_EQ(post[1], 0.0);
  }
}

TEST(Posterior, MatchesBayesRatio) {
  std::mt19937_64 rng(13);
  for (ModelTag tag : kAllModelTags) {
    const auto p = testutil::random_params(3, 2, tag, rng);
    const Matrix x = testutil::random_points(25, 2, rng, 1.5);
    const auto [post, log_dens] = posterior_matrix(x, p);
    for (int i = 0; i < x.rows(); ++i) {
      const Vector oracle = naive_posterior(x.row(i).transpose(), p);
      for (int k = 0; k < p.c(); ++k) EXPECT_NEAR(post(i, k), oracle[k], 1e-10);
      EXPECT_NEAR(post.row(i).sum(), 1.0, 1e-14);
    }
  }
}

TEST(Posterior, UnderflowIsReported) {
  const auto p = one_dim({0.5, 0.5}, {0.0, 1.0}, 1e-4);
  try {
    posterior(Vector::Constant(1, 1e200), p);
    FAIL() << "expected posterior_undefined";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::posterior_undefined);
  }
}

TEST(Posterior, LabelPermutationPermutesRows) {
  std::mt19937_64 rng(14);
  const auto p = testutil::random_params(4, 2, ModelTag::VVV, rng);
  const std::vector<int> perm{2, 0, 3, 1};
  const auto q = p.permuted(perm);
  const Matrix x = testutil::random_points(12, 2, rng, 1.5);
  const auto post_p = posterior_matrix(x, p).first;
  const auto post_q = posterior_matrix(x, q).first;
  for (int i = 0; i < x.rows(); ++i)
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(post_q(i, k), post_p(i, perm[static_cast<std::size_t>(k)]), 1e-12);
  const auto pp = pairwise_probabilities(post_p);
  const auto pq = pairwise_probabilities(post_q);
  for (std::size_t k = 0; k < pp.size(); ++k) EXPECT_NEAR(pp[k], pq[k], 1e-12);
}

TEST(PairwiseProb, Examples) {
  const std::vector<double> e1{1, 0, 0}, e2{0, 1, 0}, h{0.5, 0.5};
  EXPECT_EQ(pairwise_prob(e1, e2), 0.0);
  EXPECT_EQ(pairwise_prob(e1, e1), 1.0);
  EXPECT_EQ(pairwise_prob(h, h), 0.5);
}

TEST(PairwiseProb, LengthMismatch) {
  const std::vector<double> a{1, 0, 0}, b{0.5, 0.5};
  try {
    pairwise_prob(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(PairwiseProb, SelfProbabilityAtLeastOneOverC) {
  std::mt19937_64 rng(15);
  for (int c = 1; c <= 8; ++c)
    for (int t = 0; t < 50; ++t) {
      const Vector p = testutil::random_simplex(c, rng);
      EXPECT_GE(pairwise_prob(p, p), 1.0 / c - 1e-15);
    }
}

TEST(MixtureParams, RejectsInvalidInputs) {
  const Matrix I = Matrix::Identity(2, 2);
  const Vector mu = Vector::Zero(2);
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  EXPECT_EQ(kind_of([&] { MixtureParams(Vector::Constant(2, 0.6), {mu, mu}, {I, I}, ModelTag::VVV); }), ErrorKind::invalid_argument);
  Matrix asym = I;
  asym(0, 1) = 0.1;
  EXPECT_EQ(kind_of([&] { MixtureParams(Vector::Constant(1, 1.0), {mu}, {asym}, ModelTag::VVV); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { MixtureParams(Vector::Constant(2, 0.5), {mu, mu}, {I, 2.0 * I}, ModelTag::EII); }), ErrorKind::invalid_argument);
  Matrix corr(2, 2);
  corr << 1, 0.3, 0.3, 1;
  EXPECT_EQ(kind_of([&] { MixtureParams(Vector::Constant(1, 1.0), {mu}, {corr}, ModelTag::EII); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { MixtureParams(Vector::Constant(2, 0.5), {mu, mu}, {I, corr}, ModelTag::EEE); }), ErrorKind::invalid_argument);
  EXPECT_EQ(kind_of([&] { MixtureParams(Vector::Constant(1, 1.0), {mu}, {Matrix::Zero(2, 2)}, ModelTag::VVV); }),
            ErrorKind::degenerate_parameters);
  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  EXPECT_EQ(kind_of([&] { MixtureParams(Vector::Constant(1, 1.0), {mu}, {indefinite}, ModelTag::VVV); }),
            ErrorKind::degenerate_parameters);
  EXPECT_EQ(kind_of([&] { MixtureParams(Vector::Constant(1, 1.0), {mu}, {Matrix::Identity(3, 3)}, ModelTag::VVV); }), ErrorKind::dimension);
}

TEST(MixtureParams, SingularCovarianceIsFloored) {
  Matrix rank1(2, 2);
  rank1 << 1, 1, 1, 1;
  const MixtureParams p(Vector::Constant(1, 1.0), {Vector::Zero(2)}, {rank1}, ModelTag::VVV);
  EXPECT_TRUE(p.floored());
  EXPECT_GT(p.covariance(0).determinant(), 0.0);
  EXPECT_TRUE(std::isfinite(log_density(Vector::Zero(2), p)));
}

TEST(FreeParameters, DirectCount) {
  for (int c = 1; c <= 5; ++c)
    for (int d = 1; d <= 4; ++d) {
      const double base = (c - 1) + c * d;
      EXPECT_EQ(free_parameter_count(ModelTag::EII, c, d), base + 1);
      EXPECT_EQ(free_parameter_count(ModelTag::EEE, c, d), base + d * (d + 1) / 2);
      EXPECT_EQ(free_parameter_count(ModelTag::VVV, c, d), base + c * d * (d + 1) / 2);
    }
}

TEST(ModelTag, ParseRoundTrip) {
  for (ModelTag t : kAllModelTags) EXPECT_EQ(parse_model_tag(to_string(t)), t);
  EXPECT_EQ(parse_model_tag("eee"), ModelTag::EEE);
  EXPECT_FALSE(parse_model_tag("VEV").has_value());
}
