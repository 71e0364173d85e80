#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "credalboot/bootstrap.hpp"
#include "credalboot/core.hpp"
#include "credalboot/credal.hpp"
#include "credalboot/em.hpp"
#include "credalboot/focal_select.hpp"
#include "credalboot/gmm.hpp"
#include "credalboot/irqp.hpp"

namespace credalboot {

struct MixtureSpec {
  std::string name;
  MixtureParams params;
};

namespace mixtures {

inline Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

inline Vector thirds() { return Vector::Constant(3, 1.0 / 3.0) / Vector::Constant(3, 1.0 / 3.0).sum(); }

/// Spherical, unit covariance; means (0,0), (0,3), (3,0).
inline MixtureSpec mixture1() {
  const Matrix I = Matrix::Identity(2, 2);
  return {"Mixture1", MixtureParams(thirds(), {vec2(0, 0), vec2(0, 3), vec2(3, 0)}, {I, I, I}, ModelTag::EII)};
}

/// Shared correlated covariance; means (0,0), (0,2.5), (2.5,0).
inline MixtureSpec mixture2() {
  const Matrix S = mat2(1, 0.5, 0.5, 1);
  return {"Mixture2", MixtureParams(thirds(), {vec2(0, 0), vec2(0, 2.5), vec2(2.5, 0)}, {S, S, S}, ModelTag::EEE)};
}

/// Unconstrained covariances; means as in Mixture 1.
inline MixtureSpec mixture3() {
  return {"Mixture3", MixtureParams(thirds(), {vec2(0, 0), vec2(0, 3), vec2(3, 0)},
                                    {mat2(1, 0.5, 0.5, 1), 1.5 * mat2(1, -0.5, -0.5, 1), Matrix::Identity(2, 2)},
                                    ModelTag::VVV)};
}

/// Three tight spherical clusters at (0,1), (1,0), (1,1), variance 0.1.
inline MixtureSpec small_three_cluster() {
  const Matrix S = 0.1 * Matrix::Identity(2, 2);
  return {"SmallThreeCluster", MixtureParams(thirds(), {vec2(0, 1), vec2(1, 0), vec2(1, 1)}, {S, S, S}, ModelTag::EII)};
}

inline std::optional<MixtureSpec> by_name(std::string_view name) {
  if (name == "1" || name == "Mixture1" || name == "mixture1") return mixture1();
  if (name == "2" || name == "Mixture2" || name == "mixture2") return mixture2();
  if (name == "3" || name == "Mixture3" || name == "mixture3") return mixture3();
  if (name == "small" || name == "SmallThreeCluster") return small_three_cluster();
  return std::nullopt;
}

}  // namespace mixtures

struct LabeledSample {
  Dataset data;
  std::vector<int> labels;  // 0-based component index
};

/// i.i.d. draws: component from the weights, then mu_k + L_k z with z ~ N(0, I).
inline LabeledSample sample_mixture(const MixtureSpec& spec, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "sample size must be >= 1");
  const auto& p = spec.params;
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> component(p.weights().data(), p.weights().data() + p.c());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> factors;
  for (int k = 0; k < p.c(); ++k) factors.push_back(Eigen::LLT<Matrix>(p.covariance(k)).matrixL());
  Matrix x(n, p.d());
  std::vector<int> labels(static_cast<std::size_t>(n));
  Vector z(p.d());
  for (int i = 0; i < n; ++i) {
    const int k = component(rng);
    for (int a = 0; a < p.d(); ++a) z[a] = normal(rng);
    x.row(i) = (p.mean(k) + factors[static_cast<std::size_t>(k)] * z).transpose();
    labels[static_cast<std::size_t>(i)] = k;
  }
  return {Dataset(std::move(x)), std::move(labels)};
}

/// Adjusted Rand index from the pair-counting contingency table.
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::dimension, "label vectors differ in length");
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [key, count] : table) index += choose2(count);
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto& [key, count] : rows) sum_a += choose2(count);
  for (const auto& [key, count] : cols) sum_b += choose2(count);
  const double expected = sum_a * sum_b / choose2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

struct IntervalStats {
  std::vector<double> coverage;  // per dataset
  std::vector<double> length;    // per dataset
  double coverage_mean = 0.0;
  double coverage_sd = 0.0;
  double length_mean = 0.0;
  double length_sd = 0.0;

  void finalize() {
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    mean_sd(coverage, coverage_mean, coverage_sd);
    mean_sd(length, length_mean, length_sd);
  }
};

struct LevelReport {
  double level = 0.9;  // 1 - alpha
  IntervalStats ci;
  IntervalStats belpl;
  /// Per dataset: fraction of pairs where [Bel, Pl] contains [P^l, P^u].
  std::vector<double> belpl_contains_ci;
};

struct CoverageReport {
  std::string mixture;
  std::string assumed;  // "EII", "EEE", "VVV" or "Auto"
  int n = 0;
  int n_datasets = 0;
  int B = 0;
  std::vector<LevelReport> levels;
  /// Model used for each dataset (differs across datasets only in Auto mode).
  std::vector<ModelTag> fitted_models;
};

struct CoverageConfig {
  int n = 300;
  int n_datasets = 100;
  int B = 1000;
  std::vector<double> alphas{0.10, 0.05};
  std::uint64_t seed = 0;
  FitConfig fit;
  FocalSpec focal;
  double irqp_epsilon = 1e-6;
  int irqp_max_sweeps = 200;
  unsigned threads = 1;
};

/// Per-dataset outcome of one coverage run, kept for tests and diagnostics.
struct DatasetOutcome {
  ModelTag model = ModelTag::EII;
  std::vector<double> truth;  // P_ij(theta_true)
  std::vector<PairwiseIntervalMatrix> intervals;  // one per alpha
  std::vector<std::vector<PairwiseMass>> relational;  // one per alpha
};

/// Runs the full pipeline on one simulated dataset.
inline DatasetOutcome coverage_dataset(const MixtureSpec& spec, std::optional<ModelTag> assumed, const CoverageConfig& cfg,
                                       int dataset_index) {
  const auto idx = static_cast<std::uint64_t>(dataset_index);
  const LabeledSample sample = sample_mixture(spec, cfg.n, derive_seed(cfg.seed, tag_hash("data"), idx));
  const int c = spec.params.c();

  FitConfig fit_cfg = cfg.fit;
  fit_cfg.seed = derive_seed(cfg.seed, tag_hash("fit"), idx);
  const FitResult fit = assumed ? fit_em(sample.data, c, *assumed, fit_cfg) : select_model(sample.data, c, kAllModelTags, fit_cfg);

  BootstrapConfig bcfg;
  bcfg.B = cfg.B;
  bcfg.seed = derive_seed(cfg.seed, tag_hash("bootstrap"), idx);
  bcfg.threads = 1;
  const auto reps = run_bootstrap(sample.data, c, fit.params.tag(), fit_cfg, bcfg);
  const auto fitted_post = posterior_matrix(sample.data.rows(), fit.params).first;
  const auto point = pairwise_probabilities(fitted_post);

  DatasetOutcome out;
  out.model = fit.params.tag();
  out.truth = pairwise_probabilities(posterior_matrix(sample.data.rows(), spec.params).first);

  const auto similarity = cluster_similarity(fitted_post);
  auto family = std::make_shared<const FocalSetFamily>(build_family(c, cfg.focal, &similarity));
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
    auto ci = percentile_intervals(reps, cfg.alphas[a], point);
    IrqpConfig icfg;
    icfg.epsilon = cfg.irqp_epsilon;
    icfg.max_sweeps = cfg.irqp_max_sweeps;
    icfg.seed = derive_seed(cfg.seed, tag_hash("irqp"), idx, a);
    icfg.family = family;
    const auto [partition, trace] = irqp_fit(TargetPairs::from_intervals(ci), icfg);
    out.relational.push_back(relational_representation(partition));
    out.intervals.push_back(std::move(ci));
  }
  return out;
}

/// Coverage and mean length of bootstrap CIs and of [Bel, Pl] intervals
/// against P_ij(theta_true), over n_datasets simulated datasets.
inline CoverageReport coverage_experiment(const MixtureSpec& spec, std::optional<ModelTag> assumed, const CoverageConfig& cfg,
                                          std::vector<DatasetOutcome>* outcomes = nullptr) {
  if (cfg.n < 2 || cfg.n_datasets < 1 || cfg.B < 2 || cfg.alphas.empty())
    throw Error(ErrorKind::invalid_argument, "coverage experiment parameters must be positive");
  std::vector<DatasetOutcome> results(static_cast<std::size_t>(cfg.n_datasets));
  parallel_for(results.size(), cfg.threads, [&](std::size_t d) {
    try {
      results[d] = coverage_dataset(spec, assumed, cfg, static_cast<int>(d));
    } catch (const Error& e) {
      throw Error("dataset " + std::to_string(d) + ": ", e);
    }
  });

  CoverageReport report;
  report.mixture = spec.name;
  report.assumed = assumed ? std::string(to_string(*assumed)) : "Auto";
  report.n = cfg.n;
  report.n_datasets = cfg.n_datasets;
  report.B = cfg.B;
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
    LevelReport level;
    level.level = 1.0 - cfg.alphas[a];
    for (const auto& r : results) {
      const auto& ci = r.intervals[a];
      const auto& rel = r.relational[a];
      double ci_hits = 0.0, ci_len = 0.0, bp_hits = 0.0, bp_len = 0.0, nested = 0.0;
      for (std::size_t p = 0; p < r.truth.size(); ++p) {
        const double t = r.truth[p];
        ci_hits += (ci.lower[p] <= t && t <= ci.upper[p]) ? 1.0 : 0.0;
        ci_len += ci.upper[p] - ci.lower[p];
        const double bel = rel[p].bel();
        const double pl = rel[p].pl();
        bp_hits += (bel <= t && t <= pl) ? 1.0 : 0.0;
        bp_len += pl - bel;
        nested += (bel <= ci.lower[p] && pl >= ci.upper[p]) ? 1.0 : 0.0;
      }
      const auto pairs = static_cast<double>(r.truth.size());
      level.ci.coverage.push_back(ci_hits / pairs);
      level.ci.length.push_back(ci_len / pairs);
      level.belpl.coverage.push_back(bp_hits / pairs);
      level.belpl.length.push_back(bp_len / pairs);
      level.belpl_contains_ci.push_back(nested / pairs);
    }
    level.ci.finalize();
    level.belpl.finalize();
    report.levels.push_back(std::move(level));
  }
  for (const auto& r : results) report.fitted_models.push_back(r.model);
  if (outcomes) *outcomes = std::move(results);
  return report;
}

/// Coverage table: one row per (true mixture, level); for each assumed model,
/// CI and [Bel,Pl] coverage and length with their standard deviations.
inline void write_coverage_csv(std::ostream& os, const std::vector<CoverageReport>& reports) {
  std::vector<std::string> assumed_order;
  std::vector<std::string> mixture_order;
  for (const auto& r : reports) {
    if (std::find(assumed_order.begin(), assumed_order.end(), r.assumed) == assumed_order.end()) assumed_order.push_back(r.assumed);
    if (std::find(mixture_order.begin(), mixture_order.end(), r.mixture) == mixture_order.end()) mixture_order.push_back(r.mixture);
  }
  os << "true_model,level";
  for (const auto& a : assumed_order)
    for (const char* kind : {"CI", "BelPl"})
      for (const char* stat : {"coverage", "coverage_sd", "length", "length_sd"}) os << ',' << a << '_' << kind << '_' << stat;
  os << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    os << buf;
  };
  for (const auto& mix : mixture_order) {
    std::vector<double> levels;
    for (const auto& r : reports)
      if (r.mixture == mix)
        for (const auto& l : r.levels)
          if (std::find(levels.begin(), levels.end(), l.level) == levels.end()) levels.push_back(l.level);
    for (double level : levels) {
      std::snprintf(buf, sizeof buf, "%.17g", level);
      os << mix << ',' << buf;
      for (const auto& a : assumed_order) {
        const LevelReport* found = nullptr;
        for (const auto& r : reports)
          if (r.mixture == mix && r.assumed == a)
            for (const auto& l : r.levels)
              if (l.level == level) found = &l;
        for (const IntervalStats* s : {found ? &found->ci : nullptr, found ? &found->belpl : nullptr}) {
          if (s) {
            put(s->coverage_mean);
            put(s->coverage_sd);
            put(s->length_mean);
            put(s->length_sd);
          } else {
            os << ",,,,";
          }
        }
      }
      os << '\n';
    }
  }
}

}  // namespace credalboot
