#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "vulngraph/evaluation.hpp"
#include "vulngraph/pipeline.hpp"
#include "vulngraph/report.hpp"
#include "vulngraph/split.hpp"
#include "vulngraph/store.hpp"
#include "vulngraph/synthetic.hpp"

using namespace vulngraph;

namespace {

CveRecord cve(std::string id, int day, std::vector<std::string> libs) {
  CveRecord r{std::move(id), Date::from_ymd(2020, 1, 1).plus_days(day), "", {}, {}, {}, {}};
  for (auto& l : libs) r.affected.push_back({std::move(l), "1", {}});
  return r;
}

PredictionResult hits(std::vector<std::string> names) {
  PredictionResult p;
  for (auto& n : names) p.hits.push_back({std::move(n), 0.95, 1});
  return p;
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST(EvalCases, WindowBoundaries) {
  const std::vector<CveRecord> all = {cve("IN", 0, {"self"}), cve("SAME", 0, {"same_day"}), cve("A", 10, {"l"}),
                                      cve("B", 45, {"edge"}), cve("C", 46, {"late"})};
  const auto set = build_eval_cases({all[0]}, all, 45);
  ASSERT_EQ(set.cases.size(), 1u);
  EXPECT_EQ(set.cases[0].targets, (std::set<std::string>{"l", "edge"}));
  EXPECT_EQ(set.cases[0].ctx.input_time, all[0].published);

  const auto last = build_eval_cases({all[4]}, all, 45);
  EXPECT_TRUE(last.cases.empty());
  EXPECT_EQ(last.ineligible, 1u);

  // eligible (a later CVE exists) but nothing in window: kept with no targets, not trained on
  const auto far = build_eval_cases({cve("X", -200, {"q"})}, all, 45);
  ASSERT_EQ(far.cases.size(), 1u);
  EXPECT_TRUE(far.cases[0].targets.empty());
  EXPECT_TRUE(to_training_cases(far.cases).empty());
}

TEST(EvalCases, TwoRecordFixture) {
  const std::vector<CveRecord> all = {cve("IN", 0, {"a"}), cve("OTHER", 10, {"L"})};
  const auto set = build_eval_cases({all[0]}, all, 45);
  ASSERT_EQ(set.cases.size(), 1u);
  EXPECT_EQ(set.cases[0].targets, std::set<std::string>{"L"});
  const auto tc = to_training_cases(set.cases);
  ASSERT_EQ(tc.size(), 1u);
  EXPECT_EQ(tc[0].seeds, std::vector<std::string>{"a"});
}

TEST(Accuracy, Examples) {
  EXPECT_NEAR(*case_accuracy(hits({"a", "b", "c"}), std::set<std::string>{"a", "c", "z"}), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(*case_accuracy(hits({"a", "b"}), std::set<std::string>{"a", "b"}), 1.0);
  EXPECT_FALSE(case_accuracy(hits({}), std::set<std::string>{"a"}).has_value());
}

TEST(Stats, QuantilesAndMean) {
  const BoxStats b = box_stats({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(b.min, 1);
  EXPECT_DOUBLE_EQ(b.q1, 1.75);
  EXPECT_DOUBLE_EQ(b.median, 2.5);
  EXPECT_DOUBLE_EQ(b.q3, 3.25);
  EXPECT_DOUBLE_EQ(b.max, 4);
  EXPECT_DOUBLE_EQ(box_stats({7}).q1, 7);
  EXPECT_TRUE(std::isnan(mean_of({})));
  EXPECT_DOUBLE_EQ(mean_of({0.5, 1.0, 0.0}), 0.5);
}

TEST(Sweep, PathFixtureByThreshold) {
  const CohesionGraph g = Store(VULNGRAPH_FIXTURES "/path_store").read_graph();
  EvalCase c{cve("CVE-2021-0100", 380, {"libalpha"}), {"libgamma", "libdelta"}, {0, Date::from_ymd(2021, 1, 16)}};
  EvalCase orphan{cve("CVE-2021-0200", 380, {"unknown"}), {"libbeta"}, {0, Date{}}};
  const auto sweep = threshold_sweep(g, {c, orphan}, {0.5, 0.6, 0.9, 0.95, 1.0}, 2);
  EXPECT_EQ(sweep.dropped, 1u);
  ASSERT_EQ(sweep.per_threshold.size(), 5u);
  // 0.5: beta, gamma, delta -> 2/3; 0.6: same; 0.9: beta, gamma -> 1/2; 0.95: beta -> 0; 1.0: none
  const std::vector<std::optional<double>> expected = {2.0 / 3.0, 2.0 / 3.0, 0.5, 0.0, std::nullopt};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    ASSERT_EQ(sweep.per_threshold[i].outcomes.size(), 1u);
    const auto& o = sweep.per_threshold[i].outcomes[0];
    EXPECT_EQ(o.accuracy.has_value(), expected[i].has_value()) << i;
    if (expected[i]) EXPECT_NEAR(*o.accuracy, *expected[i], 1e-12) << i;
  }
  EXPECT_EQ(sweep.per_threshold[4].undefined_count(), 1u);
}

TEST(Sweep, SyntheticProperties) {
  const auto corpus = generate_synthetic_corpus();
  const auto split = split_dataset(corpus.cves, 42);
  const auto fitting = concat(split.populate, split.train);
  const CohesionGraph g = build_base_graph(
      split.populate, machine_vulnerabilities(corpus.machines, CveIndex(fitting)), MachineTag::vulnerable);
  const auto cases = build_eval_cases(split.test, corpus.cves, 45).cases;
  auto thresholds = default_thresholds();
  thresholds.push_back(1.0);
  const auto sweep = threshold_sweep(g, cases, thresholds, 2);

  const std::size_t evaluated = sweep.per_threshold.front().outcomes.size();
  EXPECT_EQ(evaluated + sweep.dropped, cases.size());
  for (const auto& t : sweep.per_threshold) {
    ASSERT_EQ(t.outcomes.size(), evaluated);
    for (double a : t.accuracies()) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  }
  EXPECT_EQ(sweep.per_threshold.back().undefined_count(), evaluated);

  // brute-force recount of every accuracy at one threshold, and hit counts shrink as θ rises
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto it = std::find_if(sweep.per_threshold[5].outcomes.begin(), sweep.per_threshold[5].outcomes.end(),
                                 [&](const CaseOutcome& o) { return o.cve_id == cases[i].input.id; });
    if (it == sweep.per_threshold[5].outcomes.end()) continue;
    const auto p = predict(g, cases[i].input, 0.5, 2, cases[i].ctx);
    std::size_t correct = 0;
    for (const auto& h : p.hits)
      for (const auto& t : cases[i].targets) correct += h.library == t;
    ASSERT_EQ(it->prediction_count, p.hits.size());
    if (p.hits.empty())
      EXPECT_FALSE(it->accuracy);
    else
      EXPECT_DOUBLE_EQ(*it->accuracy, static_cast<double>(correct) / static_cast<double>(p.hits.size()));
  }
  for (std::size_t c = 0; c < evaluated; ++c)
    for (std::size_t t = 1; t < sweep.per_threshold.size(); ++t)
      EXPECT_LE(sweep.per_threshold[t].outcomes[c].prediction_count,
                sweep.per_threshold[t - 1].outcomes[c].prediction_count);
}

TEST(Report, CsvSchemasAndBuckets) {
  EvaluationReport r;
  r.permutation = "default";
  r.feature_set = 3;
  ThresholdResult low{0.5, {{"A", 2, 0.5}, {"B", 0, std::nullopt}}};
  ThresholdResult high{0.9, {{"A", 1, 1.0}, {"B", 60, 0.25}, {"C", 75, 0.75}, {"D", 59, 0.1}}};
  r.sweep.per_threshold = {low, high};

  std::ostringstream trend, box, by;
  write_trend_csv(trend, r);
  write_box_csv(box, r);
  write_bycount_csv(by, r);
  EXPECT_EQ(trend.str(), "threshold,mean_acc,case_count\n0.500000,0.500000,1\n0.900000,0.525000,4\n");
  EXPECT_EQ(box.str(),
            "threshold,min,q1,median,q3,max\n0.500000,0.500000,0.500000,0.500000,0.500000,0.500000\n"
            "0.900000,0.100000,0.212500,0.500000,0.812500,1.000000\n");
  EXPECT_EQ(by.str(), "prediction_count_bucket,mean_acc,case_count\n1,1.000000,1\n59,0.100000,1\n60+,0.500000,2\n");
  EXPECT_EQ(prediction_count_bucket(60), "60+");
  EXPECT_EQ(prediction_count_bucket(61), "60+");
  EXPECT_EQ(prediction_count_bucket(59), "59");
}

TEST(Report, EmitWritesNamedFilesAndRoundTrips) {
  EvaluationReport r;
  r.permutation = "lessepochs";
  r.feature_set = 2;
  r.sweep.per_threshold = {{0.0, {{"A", 3, 0.0}}}, {0.9, {{"A", 1, 1.0}}}};
  PermutationReport pr{"lessepochs", {r}, 2};
  const fs::path dir = fs::temp_directory_path() / "vulngraph_report_test";
  fs::remove_all(dir);
  const auto files = emit_report(pr, dir);
  ASSERT_EQ(files.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "trend_lessepochs_2.csv"));
  EXPECT_TRUE(fs::exists(dir / "box_lessepochs_2.csv"));
  EXPECT_TRUE(fs::exists(dir / "bycount_lessepochs_2.csv"));
  std::istringstream trend(slurp(dir / "trend_lessepochs_2.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(trend, line)) ++rows;
  EXPECT_EQ(rows, 3);

  const auto back = permutation_report_from_json(nlohmann::json::parse(to_json(pr).dump()));
  const fs::path dir2 = dir / "again";
  emit_report(back, dir2);
  for (const char* f : {"trend_lessepochs_2.csv", "box_lessepochs_2.csv", "bycount_lessepochs_2.csv"})
    EXPECT_EQ(slurp(dir / f), slurp(dir2 / f)) << f;
  fs::remove_all(dir);
}

TEST(Report, BestFeatureSetSelection) {
  EvaluationReport a, b, c;
  a.feature_set = 1;
  a.sweep.per_threshold = {{0.9, {{"x", 1, 0.4}}}};
  b.feature_set = 2;
  b.sweep.per_threshold = {{0.9, {{"x", 1, 0.6}}}};
  c.feature_set = 3;
  c.sweep.per_threshold = {{0.9, {{"x", 0, std::nullopt}}}};
  EXPECT_EQ(select_best_feature_set({a, b, c}), 2);
  EXPECT_EQ(select_best_feature_set({c, a}), 1);
  b.sweep.per_threshold[0].outcomes[0].accuracy = 0.4;
  EXPECT_EQ(select_best_feature_set({a, b}), 1);
}

TEST(Presets, FieldsFollowNames) {
  EXPECT_EQ(preset_names().size(), 7u);
  EXPECT_EQ(permutation_preset("notraining").epochs, 0);
  EXPECT_EQ(permutation_preset("lessepochs").epochs, 20);
  EXPECT_EQ(permutation_preset("20topics").topic_count, 20);
  EXPECT_EQ(permutation_preset("multiple_topics").topic_mode, TopicMode::all_correlations);
  EXPECT_EQ(permutation_preset("1dimension").pca_dims, 1);
  EXPECT_EQ(permutation_preset("debian").machine_tag, MachineTag::debian);
  const auto d = permutation_preset("default");
  EXPECT_EQ(d.epochs, 50);
  EXPECT_EQ(d.topic_count, 10);
  EXPECT_THROW(permutation_preset("bogus"), ParameterError);
}

TEST(Permutation, TrainingPresetsChangeWeightsAndNotrainingKeepsThem) {
  const auto corpus = generate_synthetic_corpus();
  PipelineData data{corpus.cves, split_dataset(corpus.cves, 42), corpus.machines};
  PipelineConfig cfg;
  cfg.feature_sets = {5};
  std::vector<TrainLog> logs;
  std::vector<CohesionGraph> graphs;
  const auto none = run_permutation(permutation_preset("notraining"), cfg, data, &logs, &graphs);
  EXPECT_TRUE(none.feature_sets[0].all_unit_weights);
  EXPECT_TRUE(graphs.back().all_unit_weights());
  EXPECT_TRUE(logs.empty());
  for (const char* name : {"lessepochs", "debian", "1dimension"}) {
    logs.clear();
    const auto rep = run_permutation(permutation_preset(name), cfg, data, &logs);
    EXPECT_FALSE(rep.feature_sets[0].all_unit_weights) << name;
    ASSERT_EQ(logs.size(), 1u);
    EXPECT_EQ(logs[0].epochs_run, std::string(name) == "lessepochs" ? 20 : 50);
  }
}
