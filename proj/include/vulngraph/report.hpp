#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulngraph/error.hpp"
#include "vulngraph/evaluation.hpp"

namespace vulngraph {

inline constexpr std::size_t kPredictionCountCap = 60;
inline constexpr double kSelectionThreshold = 0.9;

// Results of one permutation on one feature set.
struct EvaluationReport {
  std::string permutation;
  int feature_set = 0;
  SweepResult sweep;
  int epochs_run = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool all_unit_weights = true;
  std::size_t training_cases = 0;

  const ThresholdResult* at(double threshold) const {
    for (const auto& t : sweep.per_threshold)
      if (std::abs(t.threshold - threshold) < 1e-12) return &t;
    return nullptr;
  }

  double mean_accuracy(double threshold) const {
    const ThresholdResult* t = at(threshold);
    return t ? mean_of(t->accuracies()) : std::nan("");
  }

  double median_accuracy(double threshold) const {
    const ThresholdResult* t = at(threshold);
    return t ? box_stats(t->accuracies()).median : std::nan("");
  }
};

struct PermutationReport {
  std::string permutation;
  std::vector<EvaluationReport> feature_sets;
  int best_feature_set = 0;

  const EvaluationReport& best() const {
    for (const auto& r : feature_sets)
      if (r.feature_set == best_feature_set) return r;
    throw DataError("report has no entry for its best feature set");
  }
};

// Highest mean accuracy at the selection threshold; undefined means rank last, ties → lower id.
inline int select_best_feature_set(const std::vector<EvaluationReport>& reports) {
  int best = 0;
  double best_mean = -1.0;
  for (const auto& r : reports) {
    double m = r.mean_accuracy(kSelectionThreshold);
    if (std::isnan(m)) m = -0.5;
    if (best == 0 || m > best_mean) {
      best = r.feature_set;
      best_mean = m;
    }
  }
  return best;
}

namespace detail {

inline std::string fmt_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::ofstream open_for_write(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

}  // namespace detail

// Bucket label for a hit count: "1".."59", then "60+".
inline std::string prediction_count_bucket(std::size_t count) {
  return count >= kPredictionCountCap ? std::to_string(kPredictionCountCap) + "+" : std::to_string(count);
}

inline void write_trend_csv(std::ostream& os, const EvaluationReport& r) {
  os << "threshold,mean_acc,case_count\n";
  for (const auto& t : r.sweep.per_threshold) {
    const auto acc = t.accuracies();
    os << detail::fmt_real(t.threshold) << ',' << detail::fmt_real(mean_of(acc)) << ',' << acc.size() << '\n';
  }
}

inline void write_box_csv(std::ostream& os, const EvaluationReport& r) {
  os << "threshold,min,q1,median,q3,max\n";
  for (const auto& t : r.sweep.per_threshold) {
    const BoxStats b = box_stats(t.accuracies());
    os << detail::fmt_real(t.threshold) << ',' << detail::fmt_real(b.min) << ',' << detail::fmt_real(b.q1) << ','
       << detail::fmt_real(b.median) << ',' << detail::fmt_real(b.q3) << ',' << detail::fmt_real(b.max) << '\n';
  }
}

// Accuracy by number of predicted libraries at the selection threshold.
inline void write_bycount_csv(std::ostream& os, const EvaluationReport& r) {
  os << "prediction_count_bucket,mean_acc,case_count\n";
  const ThresholdResult* t = r.at(kSelectionThreshold);
  if (!t) return;
  std::map<std::size_t, std::vector<double>> buckets;
  for (const auto& o : t->outcomes)
    if (o.accuracy) buckets[std::min(o.prediction_count, kPredictionCountCap)].push_back(*o.accuracy);
  for (const auto& [count, acc] : buckets)
    os << prediction_count_bucket(count) << ',' << detail::fmt_real(mean_of(acc)) << ',' << acc.size() << '\n';
}

inline std::vector<std::filesystem::path> emit_report(const PermutationReport& report,
                                                      const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& r : report.feature_sets) {
    const std::string suffix = report.permutation + "_" + std::to_string(r.feature_set) + ".csv";
    const auto trend = out_dir / ("trend_" + suffix);
    const auto box = out_dir / ("box_" + suffix);
    const auto bycount = out_dir / ("bycount_" + suffix);
    {
      auto os = detail::open_for_write(trend);
      write_trend_csv(os, r);
    }
    {
      auto os = detail::open_for_write(box);
      write_box_csv(os, r);
    }
    {
      auto os = detail::open_for_write(bycount);
      write_bycount_csv(os, r);
    }
    written.insert(written.end(), {trend, box, bycount});
  }
  return written;
}

// --- JSON snapshot ---

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json thresholds = nlohmann::json::array();
  for (const auto& t : r.sweep.per_threshold) {
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& o : t.outcomes) {
      nlohmann::json c = {{"cve_id", o.cve_id}, {"prediction_count", o.prediction_count}};
      c["accuracy"] = o.accuracy ? nlohmann::json(*o.accuracy) : nlohmann::json(nullptr);
      cases.push_back(std::move(c));
    }
    thresholds.push_back({{"threshold", t.threshold}, {"cases", std::move(cases)}});
  }
  return {{"permutation", r.permutation},   {"feature_set", r.feature_set},
          {"dropped", r.sweep.dropped},     {"epochs_run", r.epochs_run},
          {"initial_loss", r.initial_loss}, {"final_loss", r.final_loss},
          {"all_unit_weights", r.all_unit_weights}, {"training_cases", r.training_cases},
          {"thresholds", std::move(thresholds)}};
}

inline EvaluationReport evaluation_report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  r.permutation = j.at("permutation").get<std::string>();
  r.feature_set = j.at("feature_set").get<int>();
  r.sweep.dropped = j.at("dropped").get<std::size_t>();
  r.epochs_run = j.at("epochs_run").get<int>();
  r.initial_loss = j.at("initial_loss").get<double>();
  r.final_loss = j.at("final_loss").get<double>();
  r.all_unit_weights = j.at("all_unit_weights").get<bool>();
  r.training_cases = j.at("training_cases").get<std::size_t>();
  for (const auto& t : j.at("thresholds")) {
    ThresholdResult tr{t.at("threshold").get<double>(), {}};
    for (const auto& c : t.at("cases")) {
      CaseOutcome o{c.at("cve_id").get<std::string>(), c.at("prediction_count").get<std::size_t>(), std::nullopt};
      if (!c.at("accuracy").is_null()) o.accuracy = c.at("accuracy").get<double>();
      tr.outcomes.push_back(std::move(o));
    }
    r.sweep.per_threshold.push_back(std::move(tr));
  }
  return r;
}

inline nlohmann::json to_json(const PermutationReport& r) {
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& e : r.feature_sets) sets.push_back(to_json(e));
  return {{"permutation", r.permutation}, {"best_feature_set", r.best_feature_set}, {"feature_sets", std::move(sets)}};
}

inline PermutationReport permutation_report_from_json(const nlohmann::json& j) {
  PermutationReport r;
  r.permutation = j.at("permutation").get<std::string>();
  r.best_feature_set = j.at("best_feature_set").get<int>();
  for (const auto& e : j.at("feature_sets")) r.feature_sets.push_back(evaluation_report_from_json(e));
  return r;
}

}  // namespace vulngraph
