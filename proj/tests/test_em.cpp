#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "random_instances.hpp"

using namespace credalboot;

namespace {

Dataset mixture_data(const MixtureSpec& spec, int n, std::uint64_t seed) { return sample_mixture(spec, n, seed).data; }

Vector sample_mean(const Matrix& x) { return x.colwise().mean().transpose(); }

Matrix ml_covariance(const Matrix& x) {
  const Matrix centered = x.rowwise() - x.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(x.rows());
}

}  // namespace

TEST(EStep, SingleComponent) {
  std::mt19937_64 rng(1);
  const Matrix x = testutil::random_points(20, 2, rng);
  const Matrix sigma = testutil::random_spd(2, rng);
  const MixtureParams p(Vector::Ones(1), {Vector::Zero(2)}, {sigma}, ModelTag::VVV);
  const auto [resp, ll] = e_step(Dataset(x), p);
  double oracle = 0.0;
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(resp(i, 0), 1.0);
    const Vector r = x.row(i).transpose();
    oracle += -0.5 * r.dot(sigma.inverse() * r) - 0.5 * std::log(sigma.determinant()) - std::log(2.0 * std::numbers::pi);
  }
  EXPECT_NEAR(ll, oracle, 1e-10);
}

TEST(EStep, MirrorSymmetry) {
  Matrix x(2, 1);
  x << -1.5, 1.5;
  const MixtureParams p(Vector::Constant(2, 0.5), {Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)},
                        {Matrix::Identity(1, 1), Matrix::Identity(1, 1)}, ModelTag::EII);
  const auto [resp, ll] = e_step(Dataset(x), p);
  EXPECT_NEAR(resp(0, 0), resp(1, 1), 1e-15);
  EXPECT_NEAR(resp(0, 1), resp(1, 0), 1e-15);
}

TEST(EStep, MatchesPerRowPosterior) {
  std::mt19937_64 rng(2);
  const auto p = testutil::random_params(3, 3, ModelTag::VVV, rng);
  const Matrix x = testutil::random_points(30, 3, rng);
  const auto [resp, ll] = e_step(Dataset(x), p);
  double total = 0.0;
  for (int i = 0; i < 30; ++i) {
    const Vector row = x.row(i).transpose();
    const Vector post = posterior(row, p);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(resp(i, k), post[k], 1e-12);
    total += log_density(row, p);
  }
  EXPECT_NEAR(ll, total, 1e-9);
}

TEST(MStep, SingleComponentIsPlainMle) {
  std::mt19937_64 rng(3);
  const Matrix x = testutil::random_points(40, 3, rng);
  const auto p = m_step(Dataset(x), Matrix::Ones(40, 1), ModelTag::VVV);
  EXPECT_NEAR((p.mean(0) - sample_mean(x)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR((p.covariance(0) - ml_covariance(x)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(p.weight(0), 1.0, 1e-15);
}

TEST(MStep, ConstraintFamiliesHoldExactly) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 2 + trial % 3;
    const int d = 1 + trial % 4;
    const Matrix x = testutil::random_points(50, d, rng);
    Matrix resp(50, c);
    for (int i = 0; i < 50; ++i) resp.row(i) = testutil::random_simplex(c, rng).transpose();
    const auto eii = m_step(Dataset(x), resp, ModelTag::EII);
    const double lambda = eii.covariance(0)(0, 0);
    EXPECT_GT(lambda, 0.0);
    for (int k = 0; k < c; ++k) EXPECT_EQ(eii.covariance(k), Matrix(lambda * Matrix::Identity(d, d)));
    const auto eee = m_step(Dataset(x), resp, ModelTag::EEE);
    for (int k = 1; k < c; ++k) EXPECT_LE((eee.covariance(k) - eee.covariance(0)).cwiseAbs().maxCoeff(), 1e-12);
    const auto vvv = m_step(Dataset(x), resp, ModelTag::VVV);
    for (int k = 0; k < c; ++k) EXPECT_EQ(vvv.covariance(k), vvv.covariance(k).transpose());
    EXPECT_NEAR(vvv.weights().sum(), 1.0, 1e-14);
  }
}

TEST(MStep, HardResponsibilitiesGivePartitionStatistics) {
  std::mt19937_64 rng(5);
  const Matrix x = testutil::random_points(60, 2, rng);
  std::vector<int> labels(60);
  for (int i = 0; i < 60; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
  Matrix resp = Matrix::Zero(60, 3);
  for (int i = 0; i < 60; ++i) resp(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  const auto p = m_step(Dataset(x), resp, ModelTag::VVV);
  for (int k = 0; k < 3; ++k) {
    Matrix part(20, 2);
    int r = 0;
    for (int i = 0; i < 60; ++i)
      if (labels[static_cast<std::size_t>(i)] == k) part.row(r++) = x.row(i);
    EXPECT_NEAR((p.mean(k) - sample_mean(part)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_NEAR((p.covariance(k) - ml_covariance(part)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_NEAR(p.weight(k), 1.0 / 3.0, 1e-15);
  }
}

TEST(MStep, EmptyClusterIsReported) {
  std::mt19937_64 rng(6);
  const Matrix x = testutil::random_points(10, 2, rng);
  Matrix resp = Matrix::Zero(10, 2);
  resp.col(0).setOnes();
  try {
    m_step(Dataset(x), resp, ModelTag::VVV);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_cluster);
  }
}

TEST(FitEm, RecoversMixtureOneMeans) {
  const auto spec = mixtures::mixture1();
  const auto data = mixture_data(spec, 300, 1);
  FitConfig cfg;
  cfg.seed = 7;
  const auto fit = fit_em(data, 3, ModelTag::EII, cfg);
  std::vector<int> perm{0, 1, 2};
  double best = 1e300;
  do {
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) worst = std::max(worst, (fit.params.mean(perm[static_cast<std::size_t>(k)]) - spec.params.mean(k)).norm());
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_LE(best, 0.3);
  EXPECT_TRUE(fit.converged);
}

TEST(FitEm, SingleClusterConvergesImmediately) {
  std::mt19937_64 rng(8);
  const Matrix x = testutil::random_points(50, 2, rng);
  const auto fit = fit_em(Dataset(x), 1, ModelTag::VVV, FitConfig{});
  EXPECT_LE(fit.n_iter, 2);
  EXPECT_NEAR((fit.params.mean(0) - sample_mean(x)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR((fit.params.covariance(0) - ml_covariance(x)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(FitEm, Deterministic) {
  const auto data = mixture_data(mixtures::mixture3(), 200, 9);
  FitConfig cfg;
  cfg.seed = 99;
  const auto a = fit_em(data, 3, ModelTag::VVV, cfg);
  const auto b = fit_em(data, 3, ModelTag::VVV, cfg);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  EXPECT_EQ(a.n_iter, b.n_iter);
  EXPECT_EQ(a.log_likelihood_trace, b.log_likelihood_trace);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(a.params.mean(k), b.params.mean(k));
    EXPECT_EQ(a.params.covariance(k), b.params.covariance(k));
  }
  EXPECT_EQ(a.params.weights(), b.params.weights());
}

TEST(FitEm, LogLikelihoodMonotone) {
  std::mt19937_64 rng(10);
  int fits = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const ModelTag tag = kAllModelTags[trial % 3];
    const int c = 2 + trial % 3;
    const auto truth = testutil::random_params(c, 2, tag, rng);
    MixtureSpec spec{"random", truth};
    const auto data = mixture_data(spec, 80 + 10 * (trial % 5), rng());
    FitConfig cfg;
    cfg.seed = rng();
    cfg.n_restarts = 2;
    try {
      const auto fit = fit_em(data, c, tag, cfg);
      for (std::size_t t = 1; t < fit.log_likelihood_trace.size(); ++t)
        EXPECT_GE(fit.log_likelihood_trace[t], fit.log_likelihood_trace[t - 1] - 1e-9) << "trial " << trial << " step " << t;
      ++fits;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::fit_failed);
    }
  }
  EXPECT_GE(fits, 55);
}

TEST(FitEm, AllRestartsFailing) {
  Matrix x = Matrix::Ones(4, 2);
  try {
    fit_em(Dataset(x), 2, ModelTag::VVV, FitConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::fit_failed);
    EXPECT_NE(std::string(e.what()).find("restart 0"), std::string::npos);
  }
}

TEST(FitEm, RejectsBadArguments) {
  const Dataset data(Matrix::Identity(3, 2));
  EXPECT_THROW(fit_em(data, 0, ModelTag::EII, FitConfig{}), Error);
  EXPECT_THROW(fit_em(data, 4, ModelTag::EII, FitConfig{}), Error);
  FitConfig bad;
  bad.n_restarts = 0;
  EXPECT_THROW(fit_em(data, 1, ModelTag::EII, bad), Error);
}

TEST(Bic, Formula) {
  EXPECT_DOUBLE_EQ(bic_score(-100.0, ModelTag::EII, 3, 2, 300), -200.0 - 9.0 * std::log(300.0));
  EXPECT_DOUBLE_EQ(bic_score(-100.0, ModelTag::VVV, 3, 2, 300), -200.0 - 17.0 * std::log(300.0));
}

TEST(SelectModel, PicksHighestBic) {
  const auto data = mixture_data(mixtures::mixture1(), 300, 21);
  FitConfig cfg;
  cfg.seed = 3;
  const auto best = select_model(data, 3, kAllModelTags, cfg);
  for (ModelTag t : kAllModelTags) EXPECT_GE(best.bic, fit_em(data, 3, t, cfg).bic);
}

TEST(SelectModel, SingletonCandidateEqualsFit) {
  const auto data = mixture_data(mixtures::mixture2(), 150, 22);
  FitConfig cfg;
  cfg.seed = 4;
  const ModelTag only[] = {ModelTag::VVV};
  const auto a = select_model(data, 3, only, cfg);
  const auto b = fit_em(data, 3, ModelTag::VVV, cfg);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  EXPECT_EQ(a.params.tag(), ModelTag::VVV);
}

TEST(SelectModel, UnconstrainedTruthSelectsVvv) {
  const auto data = mixture_data(mixtures::mixture3(), 600, 1);
  FitConfig cfg;
  cfg.seed = 5;
  EXPECT_EQ(select_model(data, 3, kAllModelTags, cfg).params.tag(), ModelTag::VVV);
}
