// credalboot command-line front end.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "credalboot/credalboot.hpp"

namespace cb = credalboot;

namespace {

struct Options {
  cb::PipelineConfig cfg;
  std::string model = "eii";
  std::string focal = "pairs";
  std::string fit_path;
  std::string intervals_path;
  std::string partition_path;
  std::string labels_path;
  std::string mixture = "1";
  int n = 300;
  int datasets = 20;
  std::vector<double> alphas;
  bool paper_scale = false;
};

void add_seed(CLI::App* app, Options& o) {
  app->add_option("--seed", o.cfg.seed, "Master seed (CREDALBOOT_SEED overrides)");
  app->add_option("--out-dir", o.cfg.out_dir, "Output directory");
}

void add_input(CLI::App* app, Options& o, bool required) {
  auto* opt = app->add_option("--input", o.cfg.input_path, "Numeric CSV dataset");
  if (required) opt->required();
}

void add_fit_flags(CLI::App* app, Options& o) {
  app->add_option("--clusters", o.cfg.clusters, "Number of clusters c")->check(CLI::PositiveNumber);
  app->add_option("--model", o.model, "Covariance family")->check(CLI::IsMember({"eii", "eee", "vvv", "auto"}, CLI::ignore_case));
  app->add_option("--restarts", o.cfg.n_restarts, "EM restarts")->check(CLI::PositiveNumber);
}

void add_bootstrap_flags(CLI::App* app, Options& o) {
  app->add_option("--bootstrap", o.cfg.B, "Bootstrap replicates B");
  app->add_option("--alpha", o.cfg.alpha, "Interval level is 1 - alpha");
  app->add_option("--threads", o.cfg.threads, "Worker threads");
  app->add_flag("--dump-replicates", o.cfg.dump_replicates, "Write the raw replicate matrix");
}

void add_credal_flags(CLI::App* app, Options& o) {
  app->add_option("--focal", o.focal, "Focal sets")->check(CLI::IsMember({"singletons", "pairs", "knn"}));
  app->add_option("--knn", o.cfg.focal.K, "K for mutual K-NN focal pairs");
  app->add_flag("--frame", o.cfg.focal.include_frame, "Include the whole frame as a focal set");
  app->add_option("--epsilon", o.cfg.epsilon, "IRQP stopping threshold");
  app->add_option("--max-sweeps", o.cfg.max_sweeps, "IRQP sweep budget");
  app->add_option("--irqp-starts", o.cfg.irqp_starts, "IRQP random starts");
}

void finalize(Options& o) {
  if (const char* env = std::getenv("CREDALBOOT_SEED")) {
    try {
      o.cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw cb::Error(cb::ErrorKind::invalid_argument, "CREDALBOOT_SEED is not an unsigned integer");
    }
  }
  for (auto& ch : o.model) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  o.cfg.model = o.model == "auto" ? std::nullopt : cb::parse_model_tag(o.model);
  o.cfg.focal.mode = *cb::parse_focal_mode(o.focal);
}

std::string default_path(const Options& o, const std::string& given, const char* name) {
  return given.empty() ? cb::artifact_path(o.cfg, name) : given;
}

void report_ari(const Options& o, std::span<const int> labels) {
  if (o.labels_path.empty()) return;
  const auto truth = cb::io::load_labels(o.labels_path);
  std::cout << "ARI " << cb::adjusted_rand_index(truth, labels) << '\n';
}

int cmd_run(Options& o) {
  const auto result = cb::run_pipeline(o.cfg);
  std::cout << "model " << cb::to_string(result.fit.params.tag()) << " loglik " << result.fit.log_likelihood << " BIC " << result.fit.bic
            << "\nIRQP J " << result.trace.J_values.back() << " after " << result.trace.n_sweeps << " sweeps\n";
  report_ari(o, cb::map_labels(cb::posterior_matrix(cb::io::load_csv(o.cfg.input_path).rows(), result.fit.params).first));
  return 0;
}

int cmd_fit(Options& o) {
  cb::run_stage("config", [&] {
    o.cfg.validate();
    cb::ensure_out_dir(o.cfg);
  });
  const auto data = cb::run_stage("load", [&] { return cb::io::load_csv(o.cfg.input_path); });
  const auto fit = cb::run_stage("fit", [&] { return cb::fit_stage(data, o.cfg); });
  cb::run_stage("fit", [&] { cb::write_fit_artifact(o.cfg, fit, data.n()); });
  std::cout << "model " << cb::to_string(fit.params.tag()) << " loglik " << fit.log_likelihood << " BIC " << fit.bic << '\n';
  report_ari(o, cb::map_labels(cb::posterior_matrix(data.rows(), fit.params).first));
  return 0;
}

int cmd_bootstrap(Options& o) {
  const auto fit = cb::run_stage("load", [&] { return cb::io::read_fit(default_path(o, o.fit_path, cb::artifacts::kFit)); });
  o.cfg.clusters = fit.params.c();
  cb::run_stage("config", [&] {
    o.cfg.validate();
    cb::ensure_out_dir(o.cfg);
  });
  const auto data = cb::run_stage("load", [&] { return cb::io::load_csv(o.cfg.input_path); });
  const auto ci = cb::run_stage("bootstrap", [&] {
    if (!o.cfg.dump_replicates) return cb::bootstrap_stage(data, fit.params, o.cfg);
    auto dump = cb::io::detail::open_out(cb::artifact_path(o.cfg, cb::artifacts::kReplicates));
    return cb::bootstrap_stage(data, fit.params, o.cfg, &dump);
  });
  cb::run_stage("bootstrap", [&] { cb::write_intervals_artifact(o.cfg, ci); });
  return 0;
}

int cmd_credal(Options& o) {
  const auto fit = cb::run_stage("load", [&] { return cb::io::read_fit(default_path(o, o.fit_path, cb::artifacts::kFit)); });
  o.cfg.clusters = fit.params.c();
  cb::run_stage("config", [&] {
    o.cfg.validate();
    cb::ensure_out_dir(o.cfg);
  });
  const auto ci = cb::run_stage("load", [&] { return cb::io::read_intervals(default_path(o, o.intervals_path, cb::artifacts::kIntervals)); });
  std::optional<cb::ClusterSimilarity> sim;
  if (o.cfg.focal.mode == cb::FocalMode::mutual_knn) {
    if (o.cfg.input_path.empty()) throw cb::Error("[config] ", cb::Error(cb::ErrorKind::invalid_argument, "--focal knn needs --input"));
    const auto data = cb::run_stage("load", [&] { return cb::io::load_csv(o.cfg.input_path); });
    sim = cb::cluster_similarity(cb::posterior_matrix(data.rows(), fit.params).first);
  }
  auto [partition, trace] = cb::run_stage("credal", [&] {
    return cb::credal_stage(ci, cb::family_stage(fit.params.c(), o.cfg, sim ? &*sim : nullptr), o.cfg);
  });
  cb::run_stage("credal", [&] { cb::write_credal_artifacts(o.cfg, partition, trace); });
  std::cout << "IRQP J " << trace.J_values.back() << " after " << trace.n_sweeps << " sweeps\n";
  return 0;
}

int cmd_summarize(Options& o) {
  cb::run_stage("config", [&] { cb::ensure_out_dir(o.cfg); });
  const auto partition =
      cb::run_stage("load", [&] { return cb::io::read_partition(default_path(o, o.partition_path, cb::artifacts::kPartition)); });
  const std::string ci_path = default_path(o, o.intervals_path, cb::artifacts::kIntervals);
  std::optional<cb::PairwiseIntervalMatrix> ci;
  if (!o.intervals_path.empty() || std::filesystem::exists(ci_path)) ci = cb::run_stage("load", [&] { return cb::io::read_intervals(ci_path); });
  cb::run_stage("summarize", [&] { cb::write_summary_artifacts(o.cfg, partition, ci ? &*ci : nullptr); });
  if (!o.labels_path.empty()) {
    const auto rough = cb::rough_summary(partition);
    std::vector<int> labels(rough.hard_labels.begin(), rough.hard_labels.end());
    report_ari(o, labels);
  }
  return 0;
}

int cmd_simulate(Options& o) {
  cb::run_stage("config", [&] { cb::ensure_out_dir(o.cfg); });
  const auto spec = cb::mixtures::by_name(o.mixture);
  if (!spec) throw cb::Error("[config] ", cb::Error(cb::ErrorKind::invalid_argument, "unknown mixture '" + o.mixture + "'"));
  const auto sample = cb::run_stage("simulate", [&] { return cb::sample_mixture(*spec, o.n, cb::derive_seed(o.cfg.seed, cb::tag_hash("simulate"))); });
  std::vector<int> labels;
  for (int l : sample.labels) labels.push_back(l + 1);
  cb::run_stage("simulate", [&] {
    cb::io::write_file(cb::artifact_path(o.cfg, "data.csv"), [&](std::ostream& os) { cb::io::write_dataset_csv(os, sample.data); });
    cb::io::write_file(cb::artifact_path(o.cfg, "labels.csv"), [&](std::ostream& os) { cb::io::write_labels_csv(os, labels); });
  });
  return 0;
}

int cmd_coverage(Options& o) {
  cb::run_stage("config", [&] { cb::ensure_out_dir(o.cfg); });
  cb::CoverageConfig cc;
  cc.n = o.n;
  cc.n_datasets = o.datasets;
  cc.B = o.cfg.B;
  cc.alphas = o.alphas.empty() ? std::vector<double>{o.cfg.alpha} : o.alphas;
  cc.seed = o.cfg.seed;
  cc.fit.n_restarts = o.cfg.n_restarts;
  cc.focal = o.cfg.focal;
  cc.irqp_epsilon = o.cfg.epsilon;
  cc.irqp_max_sweeps = o.cfg.max_sweeps;
  cc.threads = o.cfg.threads;

  std::vector<cb::MixtureSpec> specs;
  std::vector<std::optional<cb::ModelTag>> models;
  if (o.paper_scale) {
    specs = {cb::mixtures::mixture1(), cb::mixtures::mixture2(), cb::mixtures::mixture3()};
    models = {cb::ModelTag::EII, cb::ModelTag::EEE, cb::ModelTag::VVV, std::nullopt};
    cc.n = 300;
    cc.n_datasets = 100;
    cc.B = 1000;
    cc.alphas = {0.10, 0.05};
  } else {
    const auto spec = cb::mixtures::by_name(o.mixture);
    if (!spec) throw cb::Error("[config] ", cb::Error(cb::ErrorKind::invalid_argument, "unknown mixture '" + o.mixture + "'"));
    specs = {*spec};
    models = {o.cfg.model};
  }
  for (double a : cc.alphas)
    if (!(a > 0.0 && a < 1.0)) throw cb::Error("[config] ", cb::Error(cb::ErrorKind::invalid_argument, "--alpha must lie in (0, 1)"));

  std::vector<cb::CoverageReport> reports;
  for (const auto& spec : specs)
    for (const auto& model : models) {
      cb::CoverageConfig run = cc;
      run.seed = cb::derive_seed(cc.seed, cb::tag_hash(spec.name));
      reports.push_back(cb::run_stage("coverage", [&] { return cb::coverage_experiment(spec, model, run); }));
      const auto& r = reports.back();
      for (const auto& l : r.levels)
        std::cout << r.mixture << ' ' << r.assumed << " level " << l.level << " CI coverage " << l.ci.coverage_mean << " length "
                  << l.ci.length_mean << " BelPl coverage " << l.belpl.coverage_mean << " length " << l.belpl.length_mean << '\n';
    }
  cb::run_stage("coverage", [&] {
    cb::io::write_file(cb::artifact_path(o.cfg, "coverage.csv"), [&](std::ostream& os) { cb::write_coverage_csv(os, reports); });
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidential clustering from bootstrap confidence intervals of pairwise co-cluster probabilities"};
  app.require_subcommand(1);
  Options o;
  std::map<CLI::App*, int (*)(Options&)> handlers;

  auto* run = app.add_subcommand("run", "fit, bootstrap, credal and summarize in one go");
  add_input(run, o, true);
  add_fit_flags(run, o);
  add_bootstrap_flags(run, o);
  add_credal_flags(run, o);
  add_seed(run, o);
  run->add_option("--labels", o.labels_path, "True labels, for ARI");
  handlers[run] = cmd_run;

  auto* fit = app.add_subcommand("fit", "fit the Gaussian mixture");
  add_input(fit, o, true);
  add_fit_flags(fit, o);
  add_seed(fit, o);
  fit->add_option("--labels", o.labels_path, "True labels, for ARI");
  handlers[fit] = cmd_fit;

  auto* boot = app.add_subcommand("bootstrap", "bootstrap percentile intervals from a fit");
  add_input(boot, o, true);
  boot->add_option("--fit", o.fit_path, "fit.json (default: <out-dir>/fit.json)");
  boot->add_option("--restarts", o.cfg.n_restarts, "EM restarts per replicate")->check(CLI::PositiveNumber);
  add_bootstrap_flags(boot, o);
  add_seed(boot, o);
  handlers[boot] = cmd_bootstrap;

  auto* credal = app.add_subcommand("credal", "credal partition from intervals");
  add_input(credal, o, false);
  credal->add_option("--fit", o.fit_path, "fit.json (default: <out-dir>/fit.json)");
  credal->add_option("--intervals", o.intervals_path, "intervals.csv (default: <out-dir>/intervals.csv)");
  add_credal_flags(credal, o);
  add_seed(credal, o);
  handlers[credal] = cmd_credal;

  auto* summarize = app.add_subcommand("summarize", "rough summary, relational masses and scatter table");
  summarize->add_option("--partition", o.partition_path, "partition.json (default: <out-dir>/partition.json)");
  summarize->add_option("--intervals", o.intervals_path, "intervals.csv (default: <out-dir>/intervals.csv if present)");
  summarize->add_option("--labels", o.labels_path, "True labels, for ARI of the hard assignment");
  add_seed(summarize, o);
  handlers[summarize] = cmd_summarize;

  auto* simulate = app.add_subcommand("simulate", "sample a dataset from a reference mixture");
  simulate->add_option("--mixture", o.mixture, "1, 2, 3 or small");
  simulate->add_option("--n", o.n, "Sample size")->check(CLI::PositiveNumber);
  add_seed(simulate, o);
  handlers[simulate] = cmd_simulate;

  auto* coverage = app.add_subcommand("coverage", "coverage and length of CI and [Bel, Pl] intervals");
  coverage->add_option("--mixture", o.mixture, "1, 2, 3 or small");
  coverage->add_option("--model", o.model, "Assumed covariance family")->check(CLI::IsMember({"eii", "eee", "vvv", "auto"}, CLI::ignore_case));
  coverage->add_option("--n", o.n, "Sample size per dataset")->check(CLI::PositiveNumber);
  coverage->add_option("--datasets", o.datasets, "Number of datasets")->check(CLI::PositiveNumber);
  coverage->add_option("--bootstrap", o.cfg.B, "Bootstrap replicates B");
  coverage->add_option("--alpha", o.alphas, "One or more alpha values");
  coverage->add_option("--restarts", o.cfg.n_restarts, "EM restarts")->check(CLI::PositiveNumber);
  coverage->add_option("--threads", o.cfg.threads, "Worker threads");
  coverage->add_flag("--paper-scale", o.paper_scale, "All mixtures and models, 100 datasets, B = 1000, levels 0.90 and 0.95");
  add_credal_flags(coverage, o);
  add_seed(coverage, o);
  handlers[coverage] = cmd_coverage;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    finalize(o);
    for (auto& [sub, handler] : handlers)
      if (sub->parsed()) return handler(o);
  } catch (const cb::Error& e) {
    std::cerr << "credalboot: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "credalboot: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
