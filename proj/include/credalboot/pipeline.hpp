#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "credalboot/bootstrap.hpp"
#include "credalboot/core.hpp"
#include "credalboot/credal.hpp"
#include "credalboot/em.hpp"
#include "credalboot/focal_select.hpp"
#include "credalboot/gmm.hpp"
#include "credalboot/io.hpp"
#include "credalboot/irqp.hpp"

namespace credalboot {

struct PipelineConfig {
  std::string input_path;
  int clusters = 3;
  std::optional<ModelTag> model = ModelTag::EII;  // nullopt selects by BIC
  int B = 1000;
  double alpha = 0.1;
  FocalSpec focal;
  double epsilon = 1e-6;
  int max_sweeps = 200;
  int irqp_starts = 1;
  int n_restarts = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = ".";
  bool dump_replicates = false;

  void validate() const {
    if (clusters < 1) throw Error(ErrorKind::invalid_argument, "--clusters must be >= 1");
    if (B < 2) throw Error(ErrorKind::invalid_argument, "--bootstrap must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::invalid_argument, "--alpha must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "--epsilon must be > 0");
    if (max_sweeps < 1) throw Error(ErrorKind::invalid_argument, "max sweeps must be >= 1");
    if (irqp_starts < 1) throw Error(ErrorKind::invalid_argument, "IRQP starts must be >= 1");
    if (n_restarts < 1) throw Error(ErrorKind::invalid_argument, "EM restarts must be >= 1");
    if (threads < 1) throw Error(ErrorKind::invalid_argument, "--threads must be >= 1");
    if (focal.mode == FocalMode::mutual_knn && (focal.K < 1 || focal.K >= clusters))
      throw Error(ErrorKind::invalid_argument, "--knn must lie in [1, c)");
  }

  FitConfig fit_config() const {
    FitConfig f;
    f.n_restarts = n_restarts;
    f.seed = derive_seed(seed, tag_hash("fit"));
    return f;
  }

  BootstrapConfig bootstrap_config() const {
    BootstrapConfig b;
    b.B = B;
    b.alpha = alpha;
    b.seed = derive_seed(seed, tag_hash("bootstrap"));
    b.threads = threads;
    return b;
  }

  IrqpConfig irqp_config(std::shared_ptr<const FocalSetFamily> family) const {
    IrqpConfig c;
    c.epsilon = epsilon;
    c.max_sweeps = max_sweeps;
    c.n_starts = irqp_starts;
    c.seed = derive_seed(seed, tag_hash("irqp"));
    c.family = std::move(family);
    return c;
  }
};

namespace artifacts {
inline constexpr const char* kFit = "fit.json";
inline constexpr const char* kIntervals = "intervals.csv";
inline constexpr const char* kReplicates = "replicates.bin";
inline constexpr const char* kPartition = "partition.json";
inline constexpr const char* kTrace = "trace.csv";
inline constexpr const char* kRough = "rough.json";
inline constexpr const char* kRelational = "relational.csv";
inline constexpr const char* kScatter = "scatter.csv";
}  // namespace artifacts

inline std::string artifact_path(const PipelineConfig& cfg, const char* name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline void ensure_out_dir(const PipelineConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory '" + cfg.out_dir + "': " + ec.message());
}

// ---------------------------------------------------------------- stages

inline FitResult fit_stage(const Dataset& data, const PipelineConfig& cfg) {
  if (cfg.model) return fit_em(data, cfg.clusters, *cfg.model, cfg.fit_config());
  return select_model(data, cfg.clusters, kAllModelTags, cfg.fit_config());
}

/// Bootstrap percentile intervals around the fitted point estimates.
inline PairwiseIntervalMatrix bootstrap_stage(const Dataset& data, const MixtureParams& fitted, const PipelineConfig& cfg,
                                              std::ostream* replicate_dump = nullptr) {
  const auto reps = run_bootstrap(data, fitted.c(), fitted.tag(), cfg.fit_config(), cfg.bootstrap_config());
  if (replicate_dump) reps.dump(*replicate_dump);
  auto point = pairwise_probabilities(posterior_matrix(data.rows(), fitted).first);
  return percentile_intervals(reps, cfg.alpha, std::move(point));
}

/// Focal set family for the configured mode. The K-NN mode needs the fitted
/// posterior (via `similarity`).
inline std::shared_ptr<const FocalSetFamily> family_stage(int c, const PipelineConfig& cfg, const ClusterSimilarity* similarity) {
  return std::make_shared<const FocalSetFamily>(build_family(c, cfg.focal, similarity));
}

inline std::pair<CredalPartition, IrqpTrace> credal_stage(const PairwiseIntervalMatrix& ci, std::shared_ptr<const FocalSetFamily> family,
                                                          const PipelineConfig& cfg) {
  return irqp_fit(TargetPairs::from_intervals(ci), cfg.irqp_config(std::move(family)));
}

// ---------------------------------------------------------------- artifact writers

inline void write_fit_artifact(const PipelineConfig& cfg, const FitResult& fit, int n) {
  io::write_json_file(artifact_path(cfg, artifacts::kFit), io::fit_to_json(fit, n));
}

inline void write_intervals_artifact(const PipelineConfig& cfg, const PairwiseIntervalMatrix& ci) {
  io::write_file(artifact_path(cfg, artifacts::kIntervals), [&](std::ostream& os) { io::write_intervals_csv(os, ci); });
}

inline void write_credal_artifacts(const PipelineConfig& cfg, const CredalPartition& partition, const IrqpTrace& trace) {
  io::write_json_file(artifact_path(cfg, artifacts::kPartition), io::partition_to_json(partition, &trace));
  io::write_file(artifact_path(cfg, artifacts::kTrace), [&](std::ostream& os) { write_trace_csv(os, trace); });
}

/// Rough summary, relational representation and (given intervals) the
/// Bel/Pl vs interval scatter table.
inline void write_summary_artifacts(const PipelineConfig& cfg, const CredalPartition& partition, const PairwiseIntervalMatrix* ci) {
  io::write_json_file(artifact_path(cfg, artifacts::kRough), io::rough_to_json(rough_summary(partition), partition.c()));
  const auto rel = relational_representation(partition);
  io::write_file(artifact_path(cfg, artifacts::kRelational), [&](std::ostream& os) { io::write_relational_csv(os, partition.n(), rel); });
  if (ci) io::write_file(artifact_path(cfg, artifacts::kScatter), [&](std::ostream& os) { io::write_scatter_csv(os, *ci, rel); });
}

/// Error raised inside a named stage.
inline Error stage_error(std::string_view stage, const Error& e) { return Error("[" + std::string(stage) + "] ", e); }

template <typename F>
auto run_stage(std::string_view stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw stage_error(stage, e);
  }
}

struct PipelineResult {
  FitResult fit;
  PairwiseIntervalMatrix intervals;
  CredalPartition partition;
  IrqpTrace trace;
};

/// fit -> bootstrap intervals -> IRQP partition -> summaries, writing every
/// artifact into cfg.out_dir.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  run_stage("config", [&] {
    cfg.validate();
    ensure_out_dir(cfg);
  });
  const Dataset data = run_stage("load", [&] { return io::load_csv(cfg.input_path); });
  FitResult fit = run_stage("fit", [&] { return fit_stage(data, cfg); });
  run_stage("fit", [&] { write_fit_artifact(cfg, fit, data.n()); });

  PairwiseIntervalMatrix ci = run_stage("bootstrap", [&] {
    if (!cfg.dump_replicates) return bootstrap_stage(data, fit.params, cfg);
    auto dump = io::detail::open_out(artifact_path(cfg, artifacts::kReplicates));
    return bootstrap_stage(data, fit.params, cfg, &dump);
  });
  run_stage("bootstrap", [&] { write_intervals_artifact(cfg, ci); });

  auto [partition, trace] = run_stage("credal", [&] {
    const ClusterSimilarity sim = cluster_similarity(posterior_matrix(data.rows(), fit.params).first);
    return credal_stage(ci, family_stage(fit.params.c(), cfg, &sim), cfg);
  });
  run_stage("credal", [&] { write_credal_artifacts(cfg, partition, trace); });
  run_stage("summarize", [&] { write_summary_artifacts(cfg, partition, &ci); });
  return {std::move(fit), std::move(ci), std::move(partition), std::move(trace)};
}

}  // namespace credalboot
