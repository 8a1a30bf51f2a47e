#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vulngraph/clustering.hpp"
#include "vulngraph/error.hpp"
#include "vulngraph/evaluation.hpp"
#include "vulngraph/features.hpp"
#include "vulngraph/graph.hpp"
#include "vulngraph/matching.hpp"
#include "vulngraph/pca.hpp"
#include "vulngraph/report.hpp"
#include "vulngraph/topic_model.hpp"
#include "vulngraph/training.hpp"

namespace vulngraph {

enum class ClusterAlgo { kmeans, dbscan };

struct PipelineConfig {
  std::uint64_t seed = 42;
  int topic_count = 10;
  TopicMode topic_mode = TopicMode::argmax;
  int pca_dims = 0;  // 0 keeps the full feature dimension
  CategoricalEncoding encoding = CategoricalEncoding::ordinal;
  ClusterAlgo cluster_algo = ClusterAlgo::kmeans;
  int k = 6;
  double eps = 0.5;
  int min_pts = 5;
  int epochs = 50;
  double lr = 0.1;
  int depth = 2;
  int window_days = 45;
  MachineTag machine_tag = MachineTag::vulnerable;
  std::vector<int> feature_sets = {1, 2, 3, 4, 5, 6, 7};
  std::vector<double> thresholds = default_thresholds();
  NmfOptions nmf;
};

// --- permutation presets ---

struct PermutationPreset {
  std::string name;
  int topic_count = 10;
  TopicMode topic_mode = TopicMode::argmax;
  int pca_dims = 0;
  int epochs = 50;
  MachineTag machine_tag = MachineTag::vulnerable;

  PipelineConfig apply(PipelineConfig cfg) const {
    cfg.topic_count = topic_count;
    cfg.topic_mode = topic_mode;
    cfg.pca_dims = pca_dims;
    cfg.epochs = epochs;
    cfg.machine_tag = machine_tag;
    return cfg;
  }
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"default",    "notraining", "20topics", "multiple_topics",
                                                 "1dimension", "lessepochs", "debian"};
  return names;
}

inline PermutationPreset permutation_preset(const std::string& name) {
  PermutationPreset p;
  p.name = name;
  if (name == "default") return p;
  if (name == "notraining") {
    p.epochs = 0;
  } else if (name == "20topics") {
    p.topic_count = 20;
  } else if (name == "multiple_topics") {
    p.topic_mode = TopicMode::all_correlations;
  } else if (name == "1dimension") {
    p.pca_dims = 1;
  } else if (name == "lessepochs") {
    p.epochs = 20;
  } else if (name == "debian") {
    p.machine_tag = MachineTag::debian;
  } else {
    throw ParameterError("unknown permutation preset '" + name + "'");
  }
  return p;
}

// --- stages ---

inline std::vector<CveRecord> concat(const std::vector<CveRecord>& a, const std::vector<CveRecord>& b) {
  std::vector<CveRecord> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Topic model over the descriptions of the fitting corpus.
inline TopicModel fit_topic_model(const std::vector<CveRecord>& corpus, int topic_count, std::uint64_t seed,
                                  NmfOptions opts = {}) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus.size());
  for (const auto& r : corpus) docs.push_back(tokenize(r.description));
  return fit_nmf(docs, topic_count, seed, opts).model;
}

struct ClusterArtifacts {
  FeatureSetSpec spec;
  FeatureEncoder encoder;
  std::optional<PcaModel> pca;
  ClusterModel model;
  std::map<std::string, int> assignments;  // every record passed to fit_clusters
};

inline std::vector<double> project(const ClusterArtifacts& a, const CveRecord& r, Diagnostics* diag = nullptr) {
  std::vector<double> v = encode_features(r, a.spec, a.encoder, diag).values;
  if (a.pca) v = apply_pca(*a.pca, v);
  return v;
}

// Encodes, optionally reduces, and clusters the fitting corpus, then assigns every record
// in `all` (fitting rows keep their fitted labels).
inline ClusterArtifacts fit_clusters(const std::vector<CveRecord>& corpus, const std::vector<CveRecord>& all,
                                     const FeatureSetSpec& spec, FeatureEncoder encoder, const PipelineConfig& cfg,
                                     Diagnostics* diag = nullptr) {
  spec.validate();
  ClusterArtifacts a{spec, std::move(encoder), std::nullopt, KMeansModel{}, {}};
  std::vector<FeatureVector> vectors;
  for (const auto& r : corpus) vectors.push_back(encode_features(r, spec, a.encoder, diag));
  Matrix x = feature_matrix(vectors);
  if (cfg.pca_dims > 0) {
    a.pca = fit_pca(x, static_cast<std::size_t>(cfg.pca_dims));
    Matrix reduced(x.rows(), static_cast<std::size_t>(cfg.pca_dims));
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto p = apply_pca(*a.pca, x.row(i));
      std::copy(p.begin(), p.end(), reduced.row(i).begin());
    }
    x = std::move(reduced);
  }
  std::vector<int> labels;
  if (cfg.cluster_algo == ClusterAlgo::kmeans) {
    KMeansModel km = fit_kmeans(x, cfg.k, cfg.seed);
    labels = km.assignments;
    a.model = std::move(km);
  } else {
    DbscanModel db = fit_dbscan(x, cfg.eps, cfg.min_pts);
    labels = db.labels;
    a.model = std::move(db);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) a.assignments[corpus[i].id] = labels[i];
  for (const auto& r : all)
    if (!a.assignments.count(r.id)) a.assignments[r.id] = assign_cluster(project(a, r, diag), a.model);
  return a;
}

// Population from the populate split and machine data; no cluster histograms yet.
inline CohesionGraph build_base_graph(const std::vector<CveRecord>& populate,
                                      const std::vector<MachineVulnerabilities>& machines, MachineTag tag) {
  CohesionGraph g;
  populate_from_cves(g, populate);
  populate_from_machines(g, machines, tag);
  return g;
}

inline void set_case_clusters(std::vector<EvalCase>& cases, const std::map<std::string, int>& assignments) {
  for (auto& c : cases) {
    auto it = assignments.find(c.input.id);
    c.ctx.input_cluster = it == assignments.end() ? kNoise : it->second;
  }
}

struct PipelineData {
  std::vector<CveRecord> all;
  DatasetSplit split;
  std::vector<MachineInventory> machines;
};

// Runs one permutation end to end for every configured feature set.
inline PermutationReport run_permutation(const PermutationPreset& preset, const PipelineConfig& base,
                                         const PipelineData& data, std::vector<TrainLog>* logs = nullptr,
                                         std::vector<CohesionGraph>* graphs = nullptr) {
  const PipelineConfig cfg = preset.apply(base);
  if (data.split.populate.empty()) throw StageError("populate split is empty", "split");

  const std::vector<CveRecord> corpus = concat(data.split.populate, data.split.train);
  FeatureEncoder encoder;
  encoder.codebook = CategoricalCodebook::fit(corpus);
  encoder.topic_mode = cfg.topic_mode;
  encoder.encoding = cfg.encoding;
  bool needs_topics = false;
  for (int id : cfg.feature_sets) needs_topics |= feature_set_preset(id).use_topic_model;
  if (needs_topics) encoder.topics = fit_topic_model(corpus, cfg.topic_count, cfg.seed, cfg.nmf);

  // Machine data is matched against the CVEs available at training time.
  const CveIndex index(corpus);
  const auto machine_vulns = machine_vulnerabilities(data.machines, index);
  const CohesionGraph base_graph = build_base_graph(data.split.populate, machine_vulns, cfg.machine_tag);

  EvalCaseSet train_cases = build_eval_cases(data.split.train, corpus, cfg.window_days);
  EvalCaseSet test_cases = build_eval_cases(data.split.test, data.all, cfg.window_days);

  PermutationReport report;
  report.permutation = preset.name;
  for (int fs : cfg.feature_sets) {
    const FeatureSetSpec spec = feature_set_preset(fs);
    const ClusterArtifacts clusters = fit_clusters(corpus, data.all, spec, encoder, cfg);

    CohesionGraph g = base_graph;
    attach_clusters(g, clusters.assignments, data.split.populate);
    set_case_clusters(train_cases.cases, clusters.assignments);
    set_case_clusters(test_cases.cases, clusters.assignments);

    EvaluationReport r;
    r.permutation = preset.name;
    r.feature_set = fs;
    const auto training = to_training_cases(train_cases.cases);
    r.training_cases = training.size();
    if (cfg.epochs > 0 && !training.empty()) {
      const TrainLog log = train(g, training, {cfg.epochs, cfg.lr});
      r.epochs_run = log.epochs_run;
      r.initial_loss = log.initial_loss;
      r.final_loss = log.final_loss;
      if (logs) logs->push_back(log);
    } else {
      r.initial_loss = r.final_loss = training.empty() ? 0.0 : mean_case_edge_loss(g, training);
    }
    r.all_unit_weights = g.all_unit_weights();
    r.sweep = threshold_sweep(g, test_cases.cases, cfg.thresholds, cfg.depth);
    report.feature_sets.push_back(std::move(r));
    if (graphs) graphs->push_back(std::move(g));
  }
  report.best_feature_set = select_best_feature_set(report.feature_sets);
  return report;
}

}  // namespace vulngraph
